//! Canonical byte encodings, Fiat–Shamir transcripts, and the framed file
//! format shared by every artifact written to disk. All multi-byte integers
//! are big-endian and all variable-length fields are length-prefixed, so the
//! encodings are unambiguous and stable across releases.

use std::path::Path;

use crate::error::{Error, Result};

/// One-byte domain tags separating the Fiat–Shamir proof families.
pub const DOMAIN_GENERIC: u8 = 0x00;
pub const DOMAIN_S1: u8 = 0x01;
pub const DOMAIN_S2: u8 = 0x02;
pub const DOMAIN_S3: u8 = 0x03;
/// Tag under which group generators are derived from public context.
pub const DOMAIN_GENERATOR: u8 = 0x10;

/// Accumulates a domain tag followed by length-prefixed message parts.
/// The resulting byte string is what `algebra::hash_to_scalar` consumes.
#[derive(Clone)]
pub struct Transcript {
    bytes: Vec<u8>,
}

impl Transcript {
    pub fn new(domain: u8) -> Self {
        Transcript { bytes: vec![domain] }
    }

    pub fn append(&mut self, part: &[u8]) -> &mut Self {
        self.bytes.extend_from_slice(&(part.len() as u32).to_be_bytes());
        self.bytes.extend_from_slice(part);
        self
    }

    pub fn append_u64(&mut self, v: u64) -> &mut Self {
        self.append(&v.to_be_bytes())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }
}

/// Canonical byte writer used for key, proof, and ledger records.
#[derive(Default)]
pub struct ByteWriter {
    buf: Vec<u8>,
}

impl ByteWriter {
    pub fn new() -> Self {
        ByteWriter { buf: Vec::new() }
    }

    pub fn put_u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn put_u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn put_u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn put_u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    /// Two's-complement big-endian, fixed 16 bytes.
    pub fn put_i128(&mut self, v: i128) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    /// Raw bytes without a length prefix (fixed-width fields).
    pub fn put_fixed(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    /// Length-prefixed variable bytes.
    pub fn put_var(&mut self, bytes: &[u8]) {
        self.put_u32(bytes.len() as u32);
        self.buf.extend_from_slice(bytes);
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }
}

/// Canonical byte reader; every read is bounds-checked.
pub struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        ByteReader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Truncated { needed: self.pos + n - self.buf.len() });
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn get_u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn get_u16(&mut self) -> Result<u16> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn get_u32(&mut self) -> Result<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn get_u64(&mut self) -> Result<u64> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn get_i128(&mut self) -> Result<i128> {
        Ok(i128::from_be_bytes(self.take(16)?.try_into().unwrap()))
    }

    pub fn get_fixed<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().unwrap())
    }

    pub fn get_var(&mut self) -> Result<&'a [u8]> {
        let n = self.get_u32()? as usize;
        self.take(n)
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    /// Asserts the whole buffer was consumed.
    pub fn finish(self) -> Result<()> {
        if self.remaining() == 0 {
            Ok(())
        } else {
            Err(Error::TrailingBytes)
        }
    }
}

/// File kinds for the framed on-disk format.
pub mod kind {
    pub const CIRCUIT: u8 = 0x01;
    pub const PROVING_KEY: u8 = 0x02;
    pub const VERIFYING_KEY: u8 = 0x03;
    pub const BUNDLES: u8 = 0x04;
    pub const SUBMISSION: u8 = 0x05;
    pub const LEDGER: u8 = 0x06;
    pub const PAILLIER_PK: u8 = 0x07;
    pub const PAILLIER_SK: u8 = 0x08;
    pub const MASKS: u8 = 0x09;
}

const MAGIC: [u8; 4] = *b"ZKFL";
pub const FORMAT_VERSION: u16 = 1;

/// Frames `payload` with magic, kind, and version, and writes it to `path`.
pub fn write_framed(path: &Path, kind: u8, payload: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(payload.len() + 7);
    out.extend_from_slice(&MAGIC);
    out.push(kind);
    out.extend_from_slice(&FORMAT_VERSION.to_be_bytes());
    out.extend_from_slice(payload);
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads a framed file, validating magic, kind, and version.
pub fn read_framed(path: &Path, kind: u8) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path)?;
    let payload = unframe(&bytes, kind)?;
    Ok(payload.to_vec())
}

/// Validates a frame held in memory and returns its payload slice.
pub fn unframe(bytes: &[u8], kind: u8) -> Result<&[u8]> {
    if bytes.len() < 7 {
        return Err(Error::BadFrame("file shorter than header"));
    }
    if bytes[..4] != MAGIC {
        return Err(Error::BadFrame("bad magic"));
    }
    if bytes[4] != kind {
        return Err(Error::BadFrame("wrong file kind"));
    }
    let version = u16::from_be_bytes([bytes[5], bytes[6]]);
    if version != FORMAT_VERSION {
        return Err(Error::BadVersion(version));
    }
    Ok(&bytes[7..])
}
