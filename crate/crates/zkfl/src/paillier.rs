//! Paillier additive homomorphic encryption for the masked secure sum.
//!
//! Standard construction with g = n+1: keys from two equal-size primes,
//! plaintexts in Z_n with signed values encoded as n − |v|, ciphertext
//! multiplication realizing plaintext addition. Two profiles: 64-bit test
//! primes for fast suites and 2048-bit primes for realistic parameters.

use num_bigint::{BigInt, RandBigInt, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;
use std::path::Path;
use std::sync::OnceLock;

use crate::algebra::BigNat;
use crate::encode::{kind, read_framed, write_framed, ByteReader, ByteWriter};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PaillierPublicKey {
    pub n: BigNat,
    pub g: BigNat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PaillierSecretKey {
    /// λ = lcm(p−1, q−1).
    pub lambda: BigNat,
    /// μ = L(g^λ mod n²)^{−1} mod n, precomputed at keygen.
    pub mu: BigNat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PaillierCiphertext {
    pub c: BigNat,
    /// n² of the key this ciphertext lives under; lets `add` refuse to mix
    /// ciphertexts from different keys.
    pub n_squared: BigNat,
}

/// Key-size profiles: small primes keep test suites fast, the secure
/// profile uses realistic parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeyProfile {
    /// 64-bit primes (128-bit modulus).
    Test,
    /// 2048-bit primes (4096-bit modulus).
    Secure,
}

impl KeyProfile {
    pub fn prime_bits(self) -> u64 {
        match self {
            KeyProfile::Test => 64,
            KeyProfile::Secure => 2048,
        }
    }
}

impl PaillierPublicKey {
    pub fn n_squared(&self) -> BigNat {
        &self.n * &self.n
    }

    /// Signed encoding: v ≥ 0 maps to v, v < 0 to n − |v|; |v| must stay
    /// below n/2 so decoding is unambiguous.
    pub fn encode_signed(&self, v: &BigInt) -> Result<BigNat> {
        let half = &self.n >> 1;
        let mag = v.magnitude();
        if *mag >= half {
            return Err(Error::PlaintextRange);
        }
        Ok(match v.sign() {
            Sign::Minus => &self.n - mag,
            _ => mag.clone(),
        })
    }

    /// Inverse of [`encode_signed`]: residues above n/2 are negative.
    pub fn decode_signed(&self, m: &BigNat) -> BigInt {
        let half = &self.n >> 1;
        if *m > half {
            -BigInt::from(&self.n - m)
        } else {
            BigInt::from(m.clone())
        }
    }
}

// ---------------------------------------------------------------------------
// Primality
// ---------------------------------------------------------------------------

fn small_primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let mut out = vec![2u64];
        'cand: for c in (3..1024u64).step_by(2) {
            for p in &out {
                if p * p > c {
                    break;
                }
                if c % p == 0 {
                    continue 'cand;
                }
            }
            out.push(c);
        }
        out
    })
}

/// Miller–Rabin with a small-prime sieve in front. `rounds` random bases
/// put the error probability below 4^{−rounds}; below 2^20 the sieve alone
/// is conclusive.
pub fn is_probable_prime(n: &BigNat, rounds: u32, mut rng: impl RngCore) -> bool {
    let two = BigNat::from(2u32);
    if *n < two {
        return false;
    }
    for &p in small_primes() {
        let p = BigNat::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    if *n < BigNat::from(1u64 << 20) {
        // Trial division above covered every factor candidate ≤ √n.
        return true;
    }

    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    'witness: for _ in 0..rounds {
        let a = rng.gen_biguint_range(&two, &n_minus_1);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn gen_prime(bits: u64, mut rng: impl RngCore) -> Result<BigNat> {
    // Expected O(bits) candidates; the generous cap only trips if the RNG
    // is broken.
    for _ in 0..(bits * 64).max(4096) {
        let mut c = rng.gen_biguint(bits);
        c.set_bit(bits - 1, true);
        c.set_bit(0, true);
        if is_probable_prime(&c, 25, &mut rng) {
            return Ok(c);
        }
    }
    Err(Error::PrimeGeneration)
}

fn modinv(a: &BigNat, m: &BigNat) -> Option<BigNat> {
    let e = BigInt::from(a.clone()).extended_gcd(&BigInt::from(m.clone()));
    if !e.gcd.is_one() {
        return None;
    }
    let m_int = BigInt::from(m.clone());
    let x = ((e.x % &m_int) + &m_int) % m_int;
    x.to_biguint()
}

// ---------------------------------------------------------------------------
// Key generation
// ---------------------------------------------------------------------------

/// L(x) = (x − 1) / n, defined on x ≡ 1 (mod n).
fn l_function(x: &BigNat, n: &BigNat) -> BigNat {
    (x - 1u32) / n
}

/// Builds a key pair from two explicit primes. Enforces the standard
/// conditions: both prime, distinct, and gcd(pq, (p−1)(q−1)) = 1.
pub fn from_primes(p: &BigNat, q: &BigNat, mut rng: impl RngCore) -> Result<(PaillierPublicKey, PaillierSecretKey)> {
    if !is_probable_prime(p, 25, &mut rng) || !is_probable_prime(q, 25, &mut rng) {
        return Err(Error::BadPaillierParams("factor is not prime"));
    }
    if p == q {
        return Err(Error::BadPaillierParams("primes must be distinct"));
    }
    let n = p * q;
    let p1q1 = (p - 1u32) * (q - 1u32);
    if !n.gcd(&p1q1).is_one() {
        return Err(Error::BadPaillierParams("gcd(pq, (p-1)(q-1)) != 1"));
    }
    let lambda = (p - 1u32).lcm(&(q - 1u32));
    let g = &n + 1u32;
    let n_squared = &n * &n;
    let mu = modinv(&l_function(&g.modpow(&lambda, &n_squared), &n), &n)
        .ok_or(Error::BadPaillierParams("L(g^lambda) not invertible"))?;
    Ok((PaillierPublicKey { n, g }, PaillierSecretKey { lambda, mu }))
}

/// Samples a fresh key pair with `bits`-size primes (minimum 16). The gcd
/// side condition can only fail for specific prime pairs, so on failure we
/// resample rather than abort.
pub fn keygen(bits: u64, mut rng: impl RngCore) -> Result<(PaillierPublicKey, PaillierSecretKey)> {
    if bits < 16 {
        return Err(Error::BadPaillierParams("prime size below 16 bits"));
    }
    loop {
        let p = gen_prime(bits, &mut rng)?;
        let q = gen_prime(bits, &mut rng)?;
        match from_primes(&p, &q, &mut rng) {
            Ok(pair) => return Ok(pair),
            Err(Error::BadPaillierParams(_)) => continue,
            Err(e) => return Err(e),
        }
    }
}

pub fn keygen_profile(
    profile: KeyProfile,
    rng: impl RngCore,
) -> Result<(PaillierPublicKey, PaillierSecretKey)> {
    keygen(profile.prime_bits(), rng)
}

// ---------------------------------------------------------------------------
// Encrypt / decrypt / add
// ---------------------------------------------------------------------------

/// c = g^m · r^n mod n² with fresh r coprime to n.
pub fn encrypt(
    pk: &PaillierPublicKey,
    m: &BigNat,
    mut rng: impl RngCore,
) -> Result<PaillierCiphertext> {
    if *m >= pk.n {
        return Err(Error::PlaintextRange);
    }
    let n_squared = pk.n_squared();
    let r = loop {
        let r = rng.gen_biguint_range(&BigNat::one(), &pk.n);
        if r.gcd(&pk.n).is_one() {
            break r;
        }
    };
    // With g = n+1, g^m mod n² collapses to 1 + m·n.
    let g_m = if pk.g == &pk.n + 1u32 {
        (BigNat::one() + m * &pk.n) % &n_squared
    } else {
        pk.g.modpow(m, &n_squared)
    };
    let c = (g_m * r.modpow(&pk.n, &n_squared)) % &n_squared;
    Ok(PaillierCiphertext { c, n_squared })
}

/// Encrypts a signed value via the n − |v| encoding.
pub fn encrypt_signed(
    pk: &PaillierPublicKey,
    v: &BigInt,
    rng: impl RngCore,
) -> Result<PaillierCiphertext> {
    encrypt(pk, &pk.encode_signed(v)?, rng)
}

/// m = L(c^λ mod n²) · μ mod n.
pub fn decrypt(
    sk: &PaillierSecretKey,
    pk: &PaillierPublicKey,
    ct: &PaillierCiphertext,
) -> Result<BigNat> {
    let n_squared = pk.n_squared();
    if ct.n_squared != n_squared {
        return Err(Error::ModulusMismatch);
    }
    if ct.c.is_zero() || ct.c >= n_squared || !ct.c.gcd(&n_squared).is_one() {
        return Err(Error::BadPaillierParams("ciphertext outside Z*_{n^2}"));
    }
    Ok((l_function(&ct.c.modpow(&sk.lambda, &n_squared), &pk.n) * &sk.mu) % &pk.n)
}

/// Decrypts and decodes a signed value.
pub fn decrypt_signed(
    sk: &PaillierSecretKey,
    pk: &PaillierPublicKey,
    ct: &PaillierCiphertext,
) -> Result<BigInt> {
    Ok(pk.decode_signed(&decrypt(sk, pk, ct)?))
}

/// Homomorphic addition: the product of ciphertexts decrypts to the sum of
/// plaintexts mod n.
pub fn add(a: &PaillierCiphertext, b: &PaillierCiphertext) -> Result<PaillierCiphertext> {
    if a.n_squared != b.n_squared {
        return Err(Error::ModulusMismatch);
    }
    Ok(PaillierCiphertext { c: (&a.c * &b.c) % &a.n_squared, n_squared: a.n_squared.clone() })
}

/// Guard for the aggregation round: the plaintext space must fit the worst
/// case sum of `n_trainers` values of magnitude ≤ `max_abs` with room for
/// the signed encoding, i.e. n > 2 · n_trainers · max_abs.
pub fn check_capacity(pk: &PaillierPublicKey, n_trainers: u64, max_abs: u128) -> Result<()> {
    let need = BigNat::from(2u32) * BigNat::from(n_trainers) * BigNat::from(max_abs);
    if pk.n <= need {
        return Err(Error::Capacity(format!(
            "modulus {} bits cannot hold {n_trainers} values of magnitude {max_abs}",
            pk.n.bits()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

fn put_nat(w: &mut ByteWriter, x: &BigNat) {
    w.put_u64(x.bits());
    w.put_var(&x.to_bytes_be());
}

fn get_nat(r: &mut ByteReader) -> Result<BigNat> {
    let bits = r.get_u64()?;
    let x = BigNat::from_bytes_be(&r.get_var()?);
    if x.bits() != bits {
        return Err(Error::BadFrame("big-integer bit-length header"));
    }
    Ok(x)
}

impl PaillierPublicKey {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = ByteWriter::new();
        put_nat(&mut w, &self.n);
        put_nat(&mut w, &self.g);
        write_framed(path, kind::PAILLIER_PK, &w.into_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_framed(path, kind::PAILLIER_PK)?;
        let mut r = ByteReader::new(&bytes);
        let pk = PaillierPublicKey { n: get_nat(&mut r)?, g: get_nat(&mut r)? };
        r.finish()?;
        Ok(pk)
    }
}

impl PaillierSecretKey {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = ByteWriter::new();
        put_nat(&mut w, &self.lambda);
        put_nat(&mut w, &self.mu);
        write_framed(path, kind::PAILLIER_SK, &w.into_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_framed(path, kind::PAILLIER_SK)?;
        let mut r = ByteReader::new(&bytes);
        let sk = PaillierSecretKey { lambda: get_nat(&mut r)?, mu: get_nat(&mut r)? };
        r.finish()?;
        Ok(sk)
    }
}

impl PaillierCiphertext {
    /// Files carry only the residue; the reader re-binds it to its key.
    pub fn write(&self, w: &mut ByteWriter) {
        w.put_var(&self.c.to_bytes_be());
    }

    pub fn read(r: &mut ByteReader, pk: &PaillierPublicKey) -> Result<Self> {
        let c = BigNat::from_bytes_be(&r.get_var()?);
        let n_squared = pk.n_squared();
        if c >= n_squared {
            return Err(Error::BadFrame("ciphertext exceeds modulus"));
        }
        Ok(PaillierCiphertext { c, n_squared })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    fn tiny_key() -> (PaillierPublicKey, PaillierSecretKey) {
        from_primes(&BigNat::from(5u32), &BigNat::from(7u32), rng(0)).unwrap()
    }

    fn test_key() -> &'static (PaillierPublicKey, PaillierSecretKey) {
        static KEY: OnceLock<(PaillierPublicKey, PaillierSecretKey)> = OnceLock::new();
        KEY.get_or_init(|| keygen_profile(KeyProfile::Test, rng(1)).unwrap())
    }

    #[test]
    fn tiny_prime_pair_matches_hand_computation() {
        let (pk, sk) = tiny_key();
        assert_eq!(pk.n, BigNat::from(35u32));
        assert_eq!(pk.g, BigNat::from(36u32));
        assert_eq!(sk.lambda, BigNat::from(12u32));
        // For g = n+1, μ = λ^{−1} mod n: 12 · 3 = 36 ≡ 1 (mod 35).
        assert_eq!(sk.mu, BigNat::from(3u32));
    }

    #[test]
    fn violated_gcd_condition_is_rejected() {
        // 5 divides 11 − 1, so gcd(55, 40) = 5 ≠ 1.
        let err = from_primes(&BigNat::from(5u32), &BigNat::from(11u32), rng(2)).unwrap_err();
        assert!(matches!(err, Error::BadPaillierParams(_)));
        // Non-prime and repeated factors are rejected too.
        assert!(from_primes(&BigNat::from(4u32), &BigNat::from(7u32), rng(2)).is_err());
        assert!(from_primes(&BigNat::from(7u32), &BigNat::from(7u32), rng(2)).is_err());
    }

    #[test]
    fn tiny_key_round_trips() {
        let (pk, sk) = tiny_key();
        let mut r = rng(3);
        for m in [0u32, 4, 17, 34] {
            let ct = encrypt(&pk, &BigNat::from(m), &mut r).unwrap();
            assert_eq!(decrypt(&sk, &pk, &ct).unwrap(), BigNat::from(m));
        }
        // c = 1 is the r = 1 encryption of zero.
        let one = PaillierCiphertext { c: BigNat::one(), n_squared: pk.n_squared() };
        assert_eq!(decrypt(&sk, &pk, &one).unwrap(), BigNat::zero());
    }

    #[test]
    fn encryption_is_probabilistic() {
        let (pk, sk) = test_key();
        let mut r = rng(4);
        let m = BigNat::from(4u32);
        let c1 = encrypt(pk, &m, &mut r).unwrap();
        let c2 = encrypt(pk, &m, &mut r).unwrap();
        assert_ne!(c1.c, c2.c);
        assert_eq!(decrypt(sk, pk, &c1).unwrap(), m);
        assert_eq!(decrypt(sk, pk, &c2).unwrap(), m);
    }

    #[test]
    fn signed_values_round_trip() {
        let (pk, sk) = test_key();
        let mut r = rng(5);
        for v in [-3i64, 0, 3, -1_000_000_007, i64::MAX, i64::MIN + 1] {
            let ct = encrypt_signed(pk, &BigInt::from(v), &mut r).unwrap();
            assert_eq!(decrypt_signed(sk, pk, &ct).unwrap(), BigInt::from(v));
        }
    }

    #[test]
    fn hundred_random_round_trips() {
        let (pk, sk) = test_key();
        let mut r = rng(6);
        for _ in 0..100 {
            let m = r.gen_biguint_below(&pk.n);
            let ct = encrypt(pk, &m, &mut r).unwrap();
            assert_eq!(decrypt(sk, pk, &ct).unwrap(), m);
        }
    }

    #[test]
    fn addition_is_homomorphic() {
        let (pk, sk) = test_key();
        let mut r = rng(7);
        let enc = |m: u32, r: &mut ChaCha20Rng| encrypt(pk, &BigNat::from(m), r).unwrap();

        let sum = add(&enc(2, &mut r), &enc(3, &mut r)).unwrap();
        assert_eq!(decrypt(sk, pk, &sum).unwrap(), BigNat::from(5u32));

        let x = enc(777, &mut r);
        let with_zero = add(&x, &enc(0, &mut r)).unwrap();
        assert_eq!(decrypt(sk, pk, &with_zero).unwrap(), BigNat::from(777u32));

        let terms = [10u32, 20, 30, 40, 50];
        let folded = terms[1..]
            .iter()
            .fold(enc(terms[0], &mut r), |acc, &m| add(&acc, &enc(m, &mut r)).unwrap());
        assert_eq!(decrypt(sk, pk, &folded).unwrap(), BigNat::from(150u32));
    }

    #[test]
    fn range_and_modulus_guards() {
        let (pk, sk) = test_key();
        let (tiny_pk, _) = tiny_key();
        let mut r = rng(8);

        assert!(matches!(encrypt(pk, &pk.n, &mut r), Err(Error::PlaintextRange)));
        let half = BigInt::from(&pk.n >> 1);
        assert!(matches!(encrypt_signed(pk, &(-&half), &mut r), Err(Error::PlaintextRange)));

        let a = encrypt(pk, &BigNat::from(1u32), &mut r).unwrap();
        let b = encrypt(&tiny_pk, &BigNat::from(1u32), &mut r).unwrap();
        assert!(matches!(add(&a, &b), Err(Error::ModulusMismatch)));
        assert!(matches!(decrypt(sk, pk, &b), Err(Error::ModulusMismatch)));
        // A ciphertext sharing a factor with n is outside Z*_{n²}.
        let bad = PaillierCiphertext { c: tiny_pk.n.clone(), n_squared: tiny_pk.n_squared() };
        let (_, tiny_sk) = tiny_key();
        assert!(matches!(
            decrypt(&tiny_sk, &tiny_pk, &bad),
            Err(Error::BadPaillierParams(_))
        ));
    }

    #[test]
    fn keygen_is_reproducible_under_a_seed() {
        let k1 = keygen_profile(KeyProfile::Test, rng(9)).unwrap();
        let k2 = keygen_profile(KeyProfile::Test, rng(9)).unwrap();
        let k3 = keygen_profile(KeyProfile::Test, rng(10)).unwrap();
        assert_eq!(k1, k2);
        assert_ne!(k1.0.n, k3.0.n);
        assert!(matches!(keygen(8, rng(11)), Err(Error::BadPaillierParams(_))));
    }

    #[test]
    fn primality_test_agrees_with_known_values() {
        let mut r = rng(12);
        for p in [2u64, 3, 5, 7, 1009, 65_537, 4_294_967_291] {
            assert!(is_probable_prime(&BigNat::from(p), 25, &mut r), "{p}");
        }
        // 561 is a Carmichael number; 2^32+1 = 641 · 6700417.
        for c in [0u64, 1, 4, 561, 1001, 4_294_967_297] {
            assert!(!is_probable_prime(&BigNat::from(c), 25, &mut r), "{c}");
        }
    }

    #[test]
    fn capacity_guard() {
        let (pk, _) = test_key();
        check_capacity(pk, 3, i64::MAX as u128).unwrap();
        let (tiny_pk, _) = tiny_key();
        assert!(matches!(check_capacity(&tiny_pk, 3, 6), Err(Error::Capacity(_))));
        check_capacity(&tiny_pk, 3, 5).unwrap();
    }

    #[test]
    fn key_files_round_trip() {
        let (pk, sk) = test_key();
        let dir = tempfile::tempdir().unwrap();
        let pk_path = dir.path().join("paillier.pk.bin");
        let sk_path = dir.path().join("paillier.sk.bin");
        pk.save(&pk_path).unwrap();
        sk.save(&sk_path).unwrap();
        assert_eq!(&PaillierPublicKey::load(&pk_path).unwrap(), pk);
        assert_eq!(&PaillierSecretKey::load(&sk_path).unwrap(), sk);
        assert!(PaillierSecretKey::load(&pk_path).is_err());

        let mut w = ByteWriter::new();
        let ct = encrypt(pk, &BigNat::from(99u32), rng(13)).unwrap();
        ct.write(&mut w);
        let bytes = w.into_bytes();
        let mut r = ByteReader::new(&bytes);
        assert_eq!(PaillierCiphertext::read(&mut r, pk).unwrap(), ct);
    }

    proptest! {
        #[test]
        fn homomorphism_over_random_pairs(x: u64, y: u64) {
            let (pk, sk) = test_key();
            let mut r = ChaCha20Rng::seed_from_u64(x ^ y.rotate_left(32));
            let mx = BigNat::from(x) % &pk.n;
            let my = BigNat::from(y) % &pk.n;
            let cx = encrypt(pk, &mx, &mut r).unwrap();
            let cy = encrypt(pk, &my, &mut r).unwrap();
            let sum = decrypt(sk, pk, &add(&cx, &cy).unwrap()).unwrap();
            prop_assert_eq!(sum, (mx + my) % &pk.n);
        }
    }
}
