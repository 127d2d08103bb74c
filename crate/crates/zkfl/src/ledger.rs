//! In-process simulation of the smart contract hosting an aggregation round.
//!
//! A single honest sequencer orders transactions into an append-only log;
//! every state transition is a pure function of that log, and a hash chain
//! over the records plus a canonical state hash make the whole history
//! auditable by replay. No consensus is simulated — auditability stands in
//! for Byzantine fault tolerance.
//!
//! The contract cannot hold the Paillier secret key, so the round closes in
//! two stages: at the n-th submission the contract folds the ciphertexts
//! itself and stores the encrypted sums; the publisher then posts the
//! decrypted result as its own transaction, which anyone can check against
//! the ciphertext sums and the summation proofs off-chain.

use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

use crate::algebra::BigNat;
use crate::aggregation::Submission;
use crate::encode::{kind, read_framed, write_framed, ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::paillier::{add, PaillierCiphertext, PaillierPublicKey};

/// Everything a transaction can carry. Contract addresses live inside the
/// payload; the envelope only knows sender, sequence, and hash.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    Deploy {
        code_id: String,
        round: u64,
        n_trainers: u32,
        /// Aggregated slots per submission.
        slots: u32,
        /// Paillier modulus (big-endian) so the contract can fold
        /// ciphertexts on its own.
        paillier_n: Vec<u8>,
    },
    Submit {
        address: String,
        trainer: u32,
        /// Canonical submission bytes.
        submission: Vec<u8>,
    },
    PublishCipherSums {
        address: String,
        /// Big-endian residues, one per slot; must match the contract's own
        /// fold exactly.
        sums: Vec<Vec<u8>>,
    },
    PublishResult {
        address: String,
        sum: Vec<i128>,
        count: u32,
    },
}

impl Payload {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        match self {
            Payload::Deploy { code_id, round, n_trainers, slots, paillier_n } => {
                w.put_u8(1);
                w.put_var(code_id.as_bytes());
                w.put_u64(*round);
                w.put_u32(*n_trainers);
                w.put_u32(*slots);
                w.put_var(paillier_n);
            }
            Payload::Submit { address, trainer, submission } => {
                w.put_u8(2);
                w.put_var(address.as_bytes());
                w.put_u32(*trainer);
                w.put_var(submission);
            }
            Payload::PublishCipherSums { address, sums } => {
                w.put_u8(3);
                w.put_var(address.as_bytes());
                w.put_u32(sums.len() as u32);
                for s in sums {
                    w.put_var(s);
                }
            }
            Payload::PublishResult { address, sum, count } => {
                w.put_u8(4);
                w.put_var(address.as_bytes());
                w.put_u32(*count);
                w.put_u32(sum.len() as u32);
                for v in sum {
                    w.put_i128(*v);
                }
            }
        }
        w.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        let get_string = |r: &mut ByteReader| -> Result<String> {
            String::from_utf8(r.get_var()?.to_vec()).map_err(|_| Error::BadFrame("payload string"))
        };
        let payload = match r.get_u8()? {
            1 => Payload::Deploy {
                code_id: get_string(&mut r)?,
                round: r.get_u64()?,
                n_trainers: r.get_u32()?,
                slots: r.get_u32()?,
                paillier_n: r.get_var()?.to_vec(),
            },
            2 => Payload::Submit {
                address: get_string(&mut r)?,
                trainer: r.get_u32()?,
                submission: r.get_var()?.to_vec(),
            },
            3 => {
                let address = get_string(&mut r)?;
                let n = r.get_u32()? as usize;
                let sums =
                    (0..n).map(|_| r.get_var().map(<[u8]>::to_vec)).collect::<Result<Vec<_>>>()?;
                Payload::PublishCipherSums { address, sums }
            }
            4 => {
                let address = get_string(&mut r)?;
                let count = r.get_u32()?;
                let n = r.get_u32()? as usize;
                let sum = (0..n).map(|_| r.get_i128()).collect::<Result<Vec<_>>>()?;
                Payload::PublishResult { address, sum, count }
            }
            _ => return Err(Error::BadFrame("payload tag")),
        };
        r.finish()?;
        Ok(payload)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transaction {
    pub sender: String,
    pub seq: u64,
    pub payload: Payload,
    pub payload_hash: [u8; 32],
}

/// Receipt of a successful transition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Receipt {
    pub seq: u64,
    pub events: Vec<String>,
}

/// Per-contract state. The published result stays absent until all
/// submissions are in and the publisher has posted it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractState {
    pub address: String,
    pub round: u64,
    pub expected: u32,
    pub slots: u32,
    pub paillier_n: Vec<u8>,
    pub submissions: BTreeMap<u32, Vec<u8>>,
    /// Contract-computed ciphertext fold, set at the n-th submission.
    pub cipher_sums: Option<Vec<Vec<u8>>>,
    /// Whether the fold was re-posted as its own log record.
    pub cipher_sums_published: bool,
    pub result: Option<(Vec<i128>, u32)>,
}

impl ContractState {
    pub fn closed(&self) -> bool {
        self.cipher_sums.is_some()
    }

    fn canonical_bytes(&self, w: &mut ByteWriter) {
        w.put_var(self.address.as_bytes());
        w.put_u64(self.round);
        w.put_u32(self.expected);
        w.put_u32(self.slots);
        w.put_var(&self.paillier_n);
        w.put_u32(self.submissions.len() as u32);
        for (trainer, bytes) in &self.submissions {
            w.put_u32(*trainer);
            w.put_var(bytes);
        }
        match &self.cipher_sums {
            None => w.put_u8(0),
            Some(sums) => {
                w.put_u8(1);
                w.put_u32(sums.len() as u32);
                for s in sums {
                    w.put_var(s);
                }
            }
        }
        w.put_u8(self.cipher_sums_published as u8);
        match &self.result {
            None => w.put_u8(0),
            Some((sum, count)) => {
                w.put_u8(1);
                w.put_u32(*count);
                w.put_u32(sum.len() as u32);
                for v in sum {
                    w.put_i128(*v);
                }
            }
        }
    }
}

fn genesis() -> [u8; 32] {
    Sha256::digest(b"zkfl-ledger-genesis").into()
}

fn sha256(bytes: &[u8]) -> [u8; 32] {
    Sha256::digest(bytes).into()
}

/// The sequenced log plus the state it determines.
#[derive(Clone, Debug, Default)]
pub struct Ledger {
    transactions: Vec<Transaction>,
    head: [u8; 32],
    contracts: BTreeMap<String, ContractState>,
}

impl Ledger {
    pub fn new() -> Self {
        Ledger { transactions: Vec::new(), head: genesis(), contracts: BTreeMap::new() }
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    /// Hash-chain head over all records.
    pub fn head(&self) -> [u8; 32] {
        self.head
    }

    pub fn contract(&self, address: &str) -> Option<&ContractState> {
        self.contracts.get(address)
    }

    pub fn contracts(&self) -> impl Iterator<Item = &ContractState> {
        self.contracts.values()
    }

    /// Canonical hash of every contract's current state.
    pub fn state_hash(&self) -> [u8; 32] {
        let mut w = ByteWriter::new();
        w.put_u32(self.contracts.len() as u32);
        for state in self.contracts.values() {
            state.canonical_bytes(&mut w);
        }
        sha256(&w.into_bytes())
    }

    fn chain_step(head: &[u8; 32], tx: &Transaction) -> [u8; 32] {
        let mut w = ByteWriter::new();
        w.put_u64(tx.seq);
        w.put_var(tx.sender.as_bytes());
        w.put_var(&tx.payload.to_bytes());
        let mut h = Sha256::new();
        h.update(head);
        h.update(w.into_bytes());
        h.finalize().into()
    }

    fn derive_address(seq: u64, code_id: &str) -> String {
        let mut h = Sha256::new();
        h.update(b"zkfl-contract");
        h.update(seq.to_be_bytes());
        h.update(code_id.as_bytes());
        hex::encode(&h.finalize()[..8])
    }

    /// Applies one payload: validates, transitions state, appends to the
    /// log. Failed payloads leave both state and log untouched.
    pub fn invoke(&mut self, sender: &str, payload: Payload) -> Result<Receipt> {
        let seq = self.transactions.len() as u64;
        let events = self.transition(seq, &payload)?;
        let bytes = payload.to_bytes();
        let tx = Transaction {
            sender: sender.to_string(),
            seq,
            payload,
            payload_hash: sha256(&bytes),
        };
        self.head = Self::chain_step(&self.head, &tx);
        self.transactions.push(tx);
        Ok(Receipt { seq, events })
    }

    /// Deploys a fresh contract; the address is derived from the sequence
    /// number, so repeated deployments get distinct addresses.
    pub fn deploy(
        &mut self,
        sender: &str,
        code_id: &str,
        round: u64,
        n_trainers: u32,
        slots: u32,
        paillier_n: &BigNat,
    ) -> Result<String> {
        let address = Self::derive_address(self.transactions.len() as u64, code_id);
        self.invoke(
            sender,
            Payload::Deploy {
                code_id: code_id.to_string(),
                round,
                n_trainers,
                slots,
                paillier_n: paillier_n.to_bytes_be(),
            },
        )?;
        Ok(address)
    }

    fn transition(&mut self, seq: u64, payload: &Payload) -> Result<Vec<String>> {
        match payload {
            Payload::Deploy { code_id, round, n_trainers, slots, paillier_n } => {
                if *n_trainers == 0 {
                    return Err(Error::Ledger("deployment requires at least one trainer"));
                }
                if *slots == 0 {
                    return Err(Error::Ledger("deployment requires at least one slot"));
                }
                let address = Self::derive_address(seq, code_id);
                if self.contracts.contains_key(&address) {
                    return Err(Error::DuplicateAddress);
                }
                self.contracts.insert(
                    address.clone(),
                    ContractState {
                        address: address.clone(),
                        round: *round,
                        expected: *n_trainers,
                        slots: *slots,
                        paillier_n: paillier_n.clone(),
                        submissions: BTreeMap::new(),
                        cipher_sums: None,
                        cipher_sums_published: false,
                        result: None,
                    },
                );
                Ok(vec![format!(
                    "deployed address={address} round={round} n={n_trainers} slots={slots}"
                )])
            }
            Payload::Submit { address, trainer, submission } => {
                let state =
                    self.contracts.get(address).ok_or(Error::UnknownAddress)?;
                if state.closed() {
                    return Err(Error::RoundClosed);
                }
                if *trainer == 0 || *trainer > state.expected {
                    return Err(Error::Ledger("trainer id outside the ring"));
                }
                if state.submissions.contains_key(trainer) {
                    return Err(Error::DuplicateSubmission(*trainer));
                }
                // Validate shape before touching state.
                let parsed = parse_submission(submission, &state.paillier_n)?;
                if parsed.ciphertexts.len() != state.slots as usize {
                    return Err(Error::Ledger("submission slot count mismatch"));
                }
                if parsed.trainer != *trainer {
                    return Err(Error::Ledger("submission trainer id mismatch"));
                }

                let state = self.contracts.get_mut(address).expect("checked above");
                state.submissions.insert(*trainer, submission.clone());
                let have = state.submissions.len() as u32;
                let want = state.expected;
                let mut events = vec![format!("submission trainer={trainer} ({have}/{want})")];
                if have == want {
                    let sums = fold_submissions(state)?;
                    state.cipher_sums = Some(sums);
                    events.push("round closed: ciphertext sums computed".to_string());
                }
                Ok(events)
            }
            Payload::PublishCipherSums { address, sums } => {
                let state = self.contracts.get(address).ok_or(Error::UnknownAddress)?;
                let computed = state
                    .cipher_sums
                    .as_ref()
                    .ok_or(Error::IncompleteRound {
                        have: state.submissions.len(),
                        want: state.expected as usize,
                    })?;
                if state.cipher_sums_published {
                    return Err(Error::Ledger("ciphertext sums already published"));
                }
                if computed != sums {
                    return Err(Error::Ledger("posted sums do not match the contract fold"));
                }
                self.contracts.get_mut(address).expect("checked above").cipher_sums_published =
                    true;
                Ok(vec!["ciphertext sums published".to_string()])
            }
            Payload::PublishResult { address, sum, count } => {
                let state = self.contracts.get(address).ok_or(Error::UnknownAddress)?;
                if !state.closed() {
                    return Err(Error::IncompleteRound {
                        have: state.submissions.len(),
                        want: state.expected as usize,
                    });
                }
                if state.result.is_some() {
                    return Err(Error::Ledger("result already published"));
                }
                if *count != state.expected {
                    return Err(Error::Ledger("result count does not match the ring size"));
                }
                if sum.len() != state.slots as usize {
                    return Err(Error::Ledger("result slot count mismatch"));
                }
                self.contracts.get_mut(address).expect("checked above").result =
                    Some((sum.clone(), *count));
                Ok(vec![format!("result published count={count}")])
            }
        }
    }

    /// Re-executes the full log from genesis and checks every stored hash:
    /// payload hashes, sequence numbers, the chain head, and the final
    /// state hash must all reproduce. Any tampering — in the log or in the
    /// state — makes this return false.
    pub fn audit(&self) -> bool {
        let mut replay = Ledger::new();
        for (k, tx) in self.transactions.iter().enumerate() {
            if tx.seq != k as u64 {
                return false;
            }
            if sha256(&tx.payload.to_bytes()) != tx.payload_hash {
                return false;
            }
            if replay.invoke(&tx.sender, tx.payload.clone()).is_err() {
                return false;
            }
        }
        replay.head == self.head && replay.state_hash() == self.state_hash()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = ByteWriter::new();
        w.put_u32(self.transactions.len() as u32);
        for tx in &self.transactions {
            w.put_var(tx.sender.as_bytes());
            w.put_u64(tx.seq);
            w.put_var(&tx.payload.to_bytes());
            w.put_fixed(&tx.payload_hash);
        }
        // The chain head seals the whole file: replaying the records must
        // land on it, so no stored byte — sender names included — can
        // change without detection.
        w.put_fixed(&self.head);
        write_framed(path, kind::LEDGER, &w.into_bytes())
    }

    /// Loads and replays the log; the reconstructed state is rejected if
    /// any stored hash fails to reproduce or the replayed chain head does
    /// not match the sealed one.
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_framed(path, kind::LEDGER)?;
        let mut r = ByteReader::new(&bytes);
        let n = r.get_u32()? as usize;
        let mut ledger = Ledger::new();
        for k in 0..n {
            let sender = String::from_utf8(r.get_var()?.to_vec())
                .map_err(|_| Error::BadFrame("transaction sender"))?;
            let seq = r.get_u64()?;
            let payload_bytes = r.get_var()?.to_vec();
            let payload_hash: [u8; 32] = r.get_fixed()?;
            if seq != k as u64 || sha256(&payload_bytes) != payload_hash {
                return Err(Error::Ledger("stored transaction fails its hash"));
            }
            let payload = Payload::from_bytes(&payload_bytes)?;
            ledger.invoke(&sender, payload)?;
        }
        let head: [u8; 32] = r.get_fixed()?;
        if head != ledger.head {
            return Err(Error::Ledger("replayed chain head does not match the sealed head"));
        }
        r.finish()?;
        Ok(ledger)
    }
}

/// Minimal public key for contract-side folding: the modulus from the
/// deployment parameters with the standard g = n+1.
fn stub_pk(paillier_n: &[u8]) -> PaillierPublicKey {
    let n = BigNat::from_bytes_be(paillier_n);
    PaillierPublicKey { g: &n + 1u32, n }
}

fn parse_submission(bytes: &[u8], paillier_n: &[u8]) -> Result<Submission> {
    let pk = stub_pk(paillier_n);
    let mut r = ByteReader::new(bytes);
    let s = Submission::read(&mut r, &pk)?;
    r.finish()?;
    Ok(s)
}

/// The on-chain aggregation: per-slot homomorphic fold over all recorded
/// submissions, in trainer order.
fn fold_submissions(state: &ContractState) -> Result<Vec<Vec<u8>>> {
    let parsed = state
        .submissions
        .values()
        .map(|bytes| parse_submission(bytes, &state.paillier_n))
        .collect::<Result<Vec<_>>>()?;
    (0..state.slots as usize)
        .map(|k| {
            let mut acc: Option<PaillierCiphertext> = None;
            for sub in &parsed {
                acc = Some(match acc {
                    None => sub.ciphertexts[k].clone(),
                    Some(a) => add(&a, &sub.ciphertexts[k])?,
                });
            }
            Ok(acc.expect("at least one submission").c.to_bytes_be())
        })
        .collect()
}

/// Rebuilds the folded ciphertexts of a closed round for decryption.
pub fn cipher_sums(state: &ContractState, pk: &PaillierPublicKey) -> Result<Vec<PaillierCiphertext>> {
    let sums = state
        .cipher_sums
        .as_ref()
        .ok_or(Error::IncompleteRound {
            have: state.submissions.len(),
            want: state.expected as usize,
        })?;
    let n_squared = pk.n_squared();
    sums.iter()
        .map(|bytes| {
            let c = BigNat::from_bytes_be(bytes);
            if c >= n_squared {
                return Err(Error::BadFrame("ciphertext sum exceeds modulus"));
            }
            Ok(PaillierCiphertext { c, n_squared: n_squared.clone() })
        })
        .collect()
}

/// Parses every recorded submission of a contract (trainer order).
pub fn recorded_submissions(
    state: &ContractState,
    pk: &PaillierPublicKey,
) -> Result<Vec<Submission>> {
    state
        .submissions
        .values()
        .map(|bytes| {
            let mut r = ByteReader::new(bytes);
            let s = Submission::read(&mut r, pk)?;
            r.finish()?;
            Ok(s)
        })
        .collect()
}
