//! Bilinear-group and big-integer substrate. Thin newtype wrappers around
//! the BLS12-381 groups fix the canonical encodings (compressed points,
//! big-endian scalars) used both on disk and in Fiat–Shamir transcripts,
//! and add the signed fixed-point embedding the quantized trainer relies on.
//!
//! Group operations are written additively in code (`+`, `*` by scalar); the
//! protocol equations read multiplicatively, so `Π g_i^{c_i}` here is
//! [`G1Elem::msm`].

use core::fmt;
use core::iter::Sum;
use core::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use ff::Field;
use group::Group;
use num_bigint::BigUint;
use rand::RngCore;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Arbitrary-precision natural number (Paillier moduli, primes, plaintexts).
pub type BigNat = BigUint;

/// Prime order of the pairing groups, as a big integer.
pub fn group_order() -> &'static BigUint {
    static Q: OnceLock<BigUint> = OnceLock::new();
    Q.get_or_init(|| {
        let minus_one = -bls12_381::Scalar::ONE;
        // q = (q - 1) + 1, recovered from the field itself rather than a
        // hard-coded constant.
        BigUint::from_bytes_le(&minus_one.to_bytes()) + 1u32
    })
}

fn half_order() -> &'static BigUint {
    static H: OnceLock<BigUint> = OnceLock::new();
    H.get_or_init(|| group_order() >> 1)
}

// ---------------------------------------------------------------------------
// Scalar
// ---------------------------------------------------------------------------

/// Residue in Z_q, q the prime order of the bilinear groups.
#[derive(Clone, Copy, PartialEq, Eq, Default)]
pub struct Scalar(pub(crate) bls12_381::Scalar);

impl Scalar {
    pub const BYTES: usize = 32;

    pub const ZERO: Scalar = Scalar(bls12_381::Scalar::ZERO);
    pub const ONE: Scalar = Scalar(bls12_381::Scalar::ONE);

    pub fn from_u64(v: u64) -> Self {
        Scalar(bls12_381::Scalar::from(v))
    }

    pub fn from_u128(v: u128) -> Self {
        let two64 = bls12_381::Scalar::from(u64::MAX) + bls12_381::Scalar::ONE;
        let hi = bls12_381::Scalar::from((v >> 64) as u64);
        let lo = bls12_381::Scalar::from(v as u64);
        Scalar(hi * two64 + lo)
    }

    /// Signed embedding: negative values map to q − |v|.
    pub fn from_i128(v: i128) -> Self {
        if v >= 0 {
            Self::from_u128(v as u128)
        } else {
            -Self::from_u128(v.unsigned_abs())
        }
    }

    /// Inverse of [`Scalar::from_i128`]; residues ≤ q/2 decode as positive,
    /// larger ones as negative. Errors when the magnitude exceeds `i128`.
    pub fn to_i128(&self) -> Result<i128> {
        let v = BigUint::from_bytes_le(&self.0.to_bytes());
        if &v <= half_order() {
            i128::try_from(&v).map_err(|_| Error::SignedDecode)
        } else {
            let mag = group_order() - &v;
            let mag = i128::try_from(&mag).map_err(|_| Error::SignedDecode)?;
            Ok(-mag)
        }
    }

    pub fn random(mut rng: impl RngCore) -> Self {
        Scalar(bls12_381::Scalar::random(&mut rng))
    }

    pub fn is_zero(&self) -> bool {
        bool::from(self.0.is_zero())
    }

    pub fn invert(&self) -> Option<Scalar> {
        Option::<bls12_381::Scalar>::from(self.0.invert()).map(Scalar)
    }

    pub fn square(&self) -> Scalar {
        Scalar(self.0.square())
    }

    /// Canonical big-endian encoding.
    pub fn to_be_bytes(&self) -> [u8; 32] {
        let mut le = self.0.to_bytes();
        le.reverse();
        le
    }

    pub fn from_be_bytes(bytes: &[u8; 32]) -> Result<Scalar> {
        let mut le = *bytes;
        le.reverse();
        Option::<bls12_381::Scalar>::from(bls12_381::Scalar::from_bytes(&le))
            .map(Scalar)
            .ok_or(Error::InvalidScalar)
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar({})", hex::encode(self.to_be_bytes()))
    }
}

macro_rules! impl_arith {
    ($t:ty) => {
        impl Add for $t {
            type Output = $t;
            fn add(self, rhs: $t) -> $t {
                Self(self.0 + rhs.0)
            }
        }
        impl<'a> Add<&'a $t> for $t {
            type Output = $t;
            fn add(self, rhs: &'a $t) -> $t {
                Self(self.0 + rhs.0)
            }
        }
        impl Sub for $t {
            type Output = $t;
            fn sub(self, rhs: $t) -> $t {
                Self(self.0 - rhs.0)
            }
        }
        impl<'a> Sub<&'a $t> for $t {
            type Output = $t;
            fn sub(self, rhs: &'a $t) -> $t {
                Self(self.0 - rhs.0)
            }
        }
        impl Neg for $t {
            type Output = $t;
            fn neg(self) -> $t {
                Self(-self.0)
            }
        }
        impl AddAssign for $t {
            fn add_assign(&mut self, rhs: $t) {
                self.0 += rhs.0;
            }
        }
        impl SubAssign for $t {
            fn sub_assign(&mut self, rhs: $t) {
                self.0 -= rhs.0;
            }
        }
        impl Sum for $t {
            fn sum<I: Iterator<Item = $t>>(iter: I) -> $t {
                iter.fold(Self(Default::default()), |a, b| a + b)
            }
        }
    };
}

impl_arith!(Scalar);

impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: Scalar) -> Scalar {
        Scalar(self.0 * rhs.0)
    }
}

impl<'a> Mul<&'a Scalar> for Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &'a Scalar) -> Scalar {
        Scalar(self.0 * rhs.0)
    }
}

/// Montgomery batch inversion; zero entries stay zero.
pub fn batch_invert(values: &mut [Scalar]) {
    let mut prods = Vec::with_capacity(values.len());
    let mut acc = bls12_381::Scalar::ONE;
    for v in values.iter() {
        prods.push(acc);
        if !v.is_zero() {
            acc *= v.0;
        }
    }
    let mut inv = Option::<bls12_381::Scalar>::from(acc.invert())
        .expect("batch_invert: product of non-zero elements is non-zero");
    for (v, p) in values.iter_mut().zip(prods).rev() {
        if !v.is_zero() {
            let orig = v.0;
            v.0 = inv * p;
            inv *= orig;
        }
    }
}

// ---------------------------------------------------------------------------
// Group elements
// ---------------------------------------------------------------------------

macro_rules! impl_group_elem {
    ($name:ident, $proj:ty, $affine:ty, $bytes:expr) => {
        impl $name {
            pub const BYTES: usize = $bytes;

            pub fn identity() -> Self {
                $name(<$proj>::identity())
            }

            pub fn generator() -> Self {
                $name(<$proj>::generator())
            }

            pub fn random(mut rng: impl RngCore) -> Self {
                $name(<$proj>::random(&mut rng))
            }

            pub fn is_identity(&self) -> bool {
                bool::from(self.0.is_identity())
            }

            /// Canonical compressed encoding.
            pub fn to_compressed(&self) -> [u8; $bytes] {
                <$affine>::from(self.0).to_compressed()
            }

            pub fn from_compressed(bytes: &[u8; $bytes]) -> Result<Self> {
                Option::<$affine>::from(<$affine>::from_compressed(bytes))
                    .map(|a| $name(<$proj>::from(a)))
                    .ok_or(Error::InvalidPoint)
            }

            /// Π bases_k^{scalars_k} via Pippenger bucketing (naive loop for
            /// short inputs).
            pub fn msm(bases: &[Self], scalars: &[Scalar]) -> Result<Self> {
                if bases.len() != scalars.len() {
                    return Err(Error::LengthMismatch {
                        expected: bases.len(),
                        got: scalars.len(),
                    });
                }
                if bases.len() < 16 {
                    return Ok(Self::msm_naive(bases, scalars).unwrap());
                }
                let raw: Vec<$proj> = bases.iter().map(|b| b.0).collect();
                let exps: Vec<bls12_381::Scalar> = scalars.iter().map(|s| s.0).collect();
                Ok($name(pippenger(&raw, &exps)))
            }

            /// Reference multi-scalar multiplication: plain
            /// exponent-multiply-accumulate. Oracle for [`Self::msm`].
            pub fn msm_naive(bases: &[Self], scalars: &[Scalar]) -> Result<Self> {
                if bases.len() != scalars.len() {
                    return Err(Error::LengthMismatch {
                        expected: bases.len(),
                        got: scalars.len(),
                    });
                }
                let mut acc = <$proj>::identity();
                for (b, s) in bases.iter().zip(scalars) {
                    acc += b.0 * s.0;
                }
                Ok($name(acc))
            }
        }

        impl_arith!($name);

        impl Mul<Scalar> for $name {
            type Output = $name;
            fn mul(self, rhs: Scalar) -> $name {
                $name(self.0 * rhs.0)
            }
        }

        impl<'a> Mul<&'a Scalar> for $name {
            type Output = $name;
            fn mul(self, rhs: &'a Scalar) -> $name {
                $name(self.0 * rhs.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($name), hex::encode(self.to_compressed()))
            }
        }
    };
}

/// Element of the first pairing group G.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct G1Elem(pub(crate) bls12_381::G1Projective);

/// Element of the second pairing group H.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct G2Elem(pub(crate) bls12_381::G2Projective);

impl_group_elem!(G1Elem, bls12_381::G1Projective, bls12_381::G1Affine, 48);
impl_group_elem!(G2Elem, bls12_381::G2Projective, bls12_381::G2Affine, 96);

/// Element of the pairing target group.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct GtElem(pub(crate) bls12_381::Gt);

impl GtElem {
    pub fn identity() -> Self {
        GtElem(bls12_381::Gt::identity())
    }

    pub fn is_identity(&self) -> bool {
        bool::from(self.0.is_identity())
    }

    /// Group operation (the "product" of target-group elements).
    pub fn combine(&self, other: &GtElem) -> GtElem {
        GtElem(self.0 + other.0)
    }

    /// Exponentiation in the target group.
    pub fn pow(&self, e: &Scalar) -> GtElem {
        GtElem(self.0 * e.0)
    }

    pub fn inverse(&self) -> GtElem {
        GtElem(-self.0)
    }
}

impl fmt::Debug for GtElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GtElem(..)")
    }
}

/// Bilinear pairing e: G × H → GT.
pub fn pairing(a: &G1Elem, b: &G2Elem) -> GtElem {
    GtElem(bls12_381::pairing(
        &bls12_381::G1Affine::from(a.0),
        &bls12_381::G2Affine::from(b.0),
    ))
}

/// Precomputed G2 argument for repeated pairings.
#[derive(Clone)]
pub struct PreparedG2(bls12_381::G2Prepared);

impl PreparedG2 {
    pub fn new(b: &G2Elem) -> Self {
        PreparedG2(bls12_381::G2Prepared::from(bls12_381::G2Affine::from(b.0)))
    }
}

/// Π e(a_k, b_k) evaluated with a shared Miller loop.
pub fn multi_pairing(terms: &[(&G1Elem, &PreparedG2)]) -> GtElem {
    let affines: Vec<bls12_381::G1Affine> =
        terms.iter().map(|(a, _)| bls12_381::G1Affine::from(a.0)).collect();
    let pairs: Vec<(&bls12_381::G1Affine, &bls12_381::G2Prepared)> =
        affines.iter().zip(terms.iter().map(|(_, p)| &p.0)).collect();
    GtElem(bls12_381::multi_miller_loop(&pairs).final_exponentiation())
}

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

/// SHA-256 of `bytes`, reduced mod q. Deterministic; domain separation comes
/// from the transcript's leading tag byte.
pub fn hash_to_scalar(bytes: &[u8]) -> Scalar {
    let digest = Sha256::digest(bytes);
    // Interpret the digest as a big-endian integer and reduce mod q: widen to
    // 64 little-endian bytes with a zero high half.
    let mut wide = [0u8; 64];
    for (i, b) in digest.iter().enumerate() {
        wide[31 - i] = *b;
    }
    Scalar(bls12_381::Scalar::from_bytes_wide(&wide))
}

/// Derives a G1 generator from public context as g^{hash_to_scalar(bytes)}.
/// The exponent is a hash output, so no party chooses the generator; the
/// derivation function's discrete log is public knowledge, which is fine for
/// the commitment linkage here (it binds values, it does not hide bases).
pub fn hash_to_g1(bytes: &[u8]) -> G1Elem {
    G1Elem::generator() * hash_to_scalar(bytes)
}


// ---------------------------------------------------------------------------
// Pippenger multi-scalar multiplication
// ---------------------------------------------------------------------------

fn pippenger<G>(bases: &[G], scalars: &[bls12_381::Scalar]) -> G
where
    G: Group<Scalar = bls12_381::Scalar> + Copy,
{
    let n = bases.len();
    let c: usize = if n < 64 {
        4
    } else if n < 512 {
        6
    } else {
        8
    };
    let le_bytes: Vec<[u8; 32]> = scalars.iter().map(|s| s.to_bytes()).collect();
    let windows = (256 + c - 1) / c;
    let mut acc = G::identity();
    for w in (0..windows).rev() {
        for _ in 0..c {
            acc = acc.double();
        }
        let mut buckets = vec![G::identity(); (1 << c) - 1];
        let bit_lo = w * c;
        for (base, bytes) in bases.iter().zip(&le_bytes) {
            let digit = window_digit(bytes, bit_lo, c);
            if digit != 0 {
                buckets[digit - 1] += base;
            }
        }
        // Suffix sums: Σ_d d·bucket[d] with 2·(2^c) additions.
        let mut running = G::identity();
        let mut sum = G::identity();
        for b in buckets.iter().rev() {
            running += b;
            sum += running;
        }
        acc += sum;
    }
    acc
}

/// Extracts `width` bits of a little-endian 256-bit integer starting at
/// `bit_lo`.
fn window_digit(le_bytes: &[u8; 32], bit_lo: usize, width: usize) -> usize {
    let mut v = 0usize;
    for i in 0..width {
        let bit = bit_lo + i;
        if bit >= 256 {
            break;
        }
        if (le_bytes[bit / 8] >> (bit % 8)) & 1 == 1 {
            v |= 1 << i;
        }
    }
    v
}
