//! Non-interactive Σ-protocols (Fiat–Shamir over SHA-256).
//!
//! Three families: s¹ proves knowledge of exponents opening one multi-base
//! commitment; s² proves two commitments under different bases share the
//! same exponent vector; s³ links a value committed under a public base to
//! a noised value committed under a per-slot base.
//!
//! Verification always recomputes the challenge from the transcript AND
//! requires the stored challenge to match, so a mutation of any proof
//! field — challenge included — fails.

use rand::RngCore;

use crate::algebra::{hash_to_scalar, G1Elem, Scalar};
use crate::encode::{ByteReader, ByteWriter, Transcript, DOMAIN_S1, DOMAIN_S2, DOMAIN_S3};
use crate::error::{Error, Result};

/// Knowledge of (c_1..c_l) with C = Π g_j^{c_j}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaS1 {
    pub a: G1Elem,
    pub e: Scalar,
    pub z: Vec<Scalar>,
}

/// Equal exponent vector under two base lists: C1 = Π g_j^{c_j},
/// C2 = Π h_j^{c_j}, one shared challenge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaS2 {
    pub a1: G1Elem,
    pub a2: G1Elem,
    pub e: Scalar,
    pub z: Vec<Scalar>,
}

/// Linkage: C1 = g_pub^c and C2 = g_ij^{c+d} share the value c.
/// Responses are additive: z1 = r1 + e·c, z2 = r2 + e·d, and the second
/// check reads g_ij^{z1+z2} = a2·a3·C2^e.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaS3 {
    pub a1: G1Elem,
    pub a2: G1Elem,
    pub a3: G1Elem,
    pub e: Scalar,
    pub z1: Scalar,
    pub z2: Scalar,
}

fn challenge_s1(bases: &[G1Elem], big_c: &G1Elem, a: &G1Elem) -> Scalar {
    let mut t = Transcript::new(DOMAIN_S1);
    for b in bases {
        t.append(&b.to_compressed());
    }
    t.append(&big_c.to_compressed());
    t.append(&a.to_compressed());
    hash_to_scalar(t.as_bytes())
}

fn challenge_s2(
    bases1: &[G1Elem],
    bases2: &[G1Elem],
    c1: &G1Elem,
    c2: &G1Elem,
    a1: &G1Elem,
    a2: &G1Elem,
) -> Scalar {
    let mut t = Transcript::new(DOMAIN_S2);
    for b in bases1.iter().chain(bases2) {
        t.append(&b.to_compressed());
    }
    for p in [c1, c2, a1, a2] {
        t.append(&p.to_compressed());
    }
    hash_to_scalar(t.as_bytes())
}

fn challenge_s3(points: [&G1Elem; 7]) -> Scalar {
    let mut t = Transcript::new(DOMAIN_S3);
    for p in points {
        t.append(&p.to_compressed());
    }
    hash_to_scalar(t.as_bytes())
}

// ---------------------------------------------------------------------------
// s¹
// ---------------------------------------------------------------------------

pub fn prove_s1(
    bases: &[G1Elem],
    c: &[Scalar],
    big_c: &G1Elem,
    mut rng: impl RngCore,
) -> Result<SigmaS1> {
    if bases.len() != c.len() {
        return Err(Error::LengthMismatch { expected: bases.len(), got: c.len() });
    }
    let r: Vec<Scalar> = (0..c.len()).map(|_| Scalar::random(&mut rng)).collect();
    let a = G1Elem::msm(bases, &r)?;
    let e = challenge_s1(bases, big_c, &a);
    let z = r.iter().zip(c).map(|(r, c)| *r + e * c).collect();
    Ok(SigmaS1 { a, e, z })
}

pub fn verify_s1(bases: &[G1Elem], big_c: &G1Elem, proof: &SigmaS1) -> Result<bool> {
    if bases.len() != proof.z.len() {
        return Err(Error::LengthMismatch { expected: bases.len(), got: proof.z.len() });
    }
    if proof.e != challenge_s1(bases, big_c, &proof.a) {
        return Ok(false);
    }
    // Π g_j^{z_j} = a · C^e
    Ok(G1Elem::msm(bases, &proof.z)? == proof.a + *big_c * proof.e)
}

// ---------------------------------------------------------------------------
// s²
// ---------------------------------------------------------------------------

pub fn prove_s2(
    bases1: &[G1Elem],
    bases2: &[G1Elem],
    c: &[Scalar],
    big_c1: &G1Elem,
    big_c2: &G1Elem,
    mut rng: impl RngCore,
) -> Result<SigmaS2> {
    if bases1.len() != c.len() || bases2.len() != c.len() {
        return Err(Error::LengthMismatch { expected: c.len(), got: bases1.len() });
    }
    let r: Vec<Scalar> = (0..c.len()).map(|_| Scalar::random(&mut rng)).collect();
    let a1 = G1Elem::msm(bases1, &r)?;
    let a2 = G1Elem::msm(bases2, &r)?;
    let e = challenge_s2(bases1, bases2, big_c1, big_c2, &a1, &a2);
    let z = r.iter().zip(c).map(|(r, c)| *r + e * c).collect();
    Ok(SigmaS2 { a1, a2, e, z })
}

pub fn verify_s2(
    bases1: &[G1Elem],
    bases2: &[G1Elem],
    big_c1: &G1Elem,
    big_c2: &G1Elem,
    proof: &SigmaS2,
) -> Result<bool> {
    if bases1.len() != proof.z.len() || bases2.len() != proof.z.len() {
        return Err(Error::LengthMismatch { expected: proof.z.len(), got: bases1.len() });
    }
    if proof.e != challenge_s2(bases1, bases2, big_c1, big_c2, &proof.a1, &proof.a2) {
        return Ok(false);
    }
    let eq4 = G1Elem::msm(bases1, &proof.z)? == proof.a1 + *big_c1 * proof.e;
    let eq5 = G1Elem::msm(bases2, &proof.z)? == proof.a2 + *big_c2 * proof.e;
    Ok(eq4 && eq5)
}

// ---------------------------------------------------------------------------
// s³
// ---------------------------------------------------------------------------

pub fn prove_s3(
    g_pub: &G1Elem,
    g_ij: &G1Elem,
    c: &Scalar,
    d: &Scalar,
    big_c1: &G1Elem,
    big_c2: &G1Elem,
    mut rng: impl RngCore,
) -> SigmaS3 {
    debug_assert_eq!(*big_c1, *g_pub * *c);
    debug_assert_eq!(*big_c2, *g_ij * (*c + d));
    let r1 = Scalar::random(&mut rng);
    let r2 = Scalar::random(&mut rng);
    let a1 = *g_pub * r1;
    let a2 = *g_ij * r1;
    let a3 = *g_ij * r2;
    let e = challenge_s3([g_pub, g_ij, big_c1, big_c2, &a1, &a2, &a3]);
    SigmaS3 { a1, a2, a3, e, z1: r1 + e * c, z2: r2 + e * d }
}

pub fn verify_s3(
    g_pub: &G1Elem,
    g_ij: &G1Elem,
    big_c1: &G1Elem,
    big_c2: &G1Elem,
    proof: &SigmaS3,
) -> bool {
    if proof.e
        != challenge_s3([g_pub, g_ij, big_c1, big_c2, &proof.a1, &proof.a2, &proof.a3])
    {
        return false;
    }
    // Eq. 7: g_pub^{z1} = a1 · C1^e
    let eq7 = *g_pub * proof.z1 == proof.a1 + *big_c1 * proof.e;
    // Eq. 8 (additive form): g_ij^{z1+z2} = a2 · a3 · C2^e
    let eq8 = *g_ij * (proof.z1 + proof.z2) == proof.a2 + proof.a3 + *big_c2 * proof.e;
    eq7 && eq8
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

fn put_scalar_vec(w: &mut ByteWriter, v: &[Scalar]) {
    w.put_u32(v.len() as u32);
    for s in v {
        w.put_fixed(&s.to_be_bytes());
    }
}

fn get_scalar_vec(r: &mut ByteReader) -> Result<Vec<Scalar>> {
    let n = r.get_u32()? as usize;
    (0..n).map(|_| Scalar::from_be_bytes(&r.get_fixed::<32>()?)).collect()
}

impl SigmaS1 {
    pub fn write(&self, w: &mut ByteWriter) {
        w.put_fixed(&self.a.to_compressed());
        w.put_fixed(&self.e.to_be_bytes());
        put_scalar_vec(w, &self.z);
    }

    pub fn read(r: &mut ByteReader) -> Result<Self> {
        Ok(SigmaS1 {
            a: G1Elem::from_compressed(&r.get_fixed::<48>()?)?,
            e: Scalar::from_be_bytes(&r.get_fixed::<32>()?)?,
            z: get_scalar_vec(r)?,
        })
    }
}

impl SigmaS2 {
    pub fn write(&self, w: &mut ByteWriter) {
        w.put_fixed(&self.a1.to_compressed());
        w.put_fixed(&self.a2.to_compressed());
        w.put_fixed(&self.e.to_be_bytes());
        put_scalar_vec(w, &self.z);
    }

    pub fn read(r: &mut ByteReader) -> Result<Self> {
        Ok(SigmaS2 {
            a1: G1Elem::from_compressed(&r.get_fixed::<48>()?)?,
            a2: G1Elem::from_compressed(&r.get_fixed::<48>()?)?,
            e: Scalar::from_be_bytes(&r.get_fixed::<32>()?)?,
            z: get_scalar_vec(r)?,
        })
    }
}

impl SigmaS3 {
    pub fn write(&self, w: &mut ByteWriter) {
        for p in [&self.a1, &self.a2, &self.a3] {
            w.put_fixed(&p.to_compressed());
        }
        for s in [&self.e, &self.z1, &self.z2] {
            w.put_fixed(&s.to_be_bytes());
        }
    }

    pub fn read(r: &mut ByteReader) -> Result<Self> {
        Ok(SigmaS3 {
            a1: G1Elem::from_compressed(&r.get_fixed::<48>()?)?,
            a2: G1Elem::from_compressed(&r.get_fixed::<48>()?)?,
            a3: G1Elem::from_compressed(&r.get_fixed::<48>()?)?,
            e: Scalar::from_be_bytes(&r.get_fixed::<32>()?)?,
            z1: Scalar::from_be_bytes(&r.get_fixed::<32>()?)?,
            z2: Scalar::from_be_bytes(&r.get_fixed::<32>()?)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    fn random_bases(n: usize, rng: &mut ChaCha20Rng) -> Vec<G1Elem> {
        (0..n).map(|_| G1Elem::random(&mut *rng)).collect()
    }

    #[test]
    fn s1_zero_exponent_identity() {
        let mut r = rng(1);
        let bases = random_bases(1, &mut r);
        let c = vec![Scalar::ZERO];
        let big_c = G1Elem::identity();
        let p = prove_s1(&bases, &c, &big_c, &mut r).unwrap();
        assert!(verify_s1(&bases, &big_c, &p).unwrap());
    }

    #[test]
    fn s1_round_trip_and_tampers() {
        let mut r = rng(2);
        let bases = random_bases(4, &mut r);
        let c: Vec<Scalar> = (0..4).map(|_| Scalar::random(&mut r)).collect();
        let big_c = G1Elem::msm(&bases, &c).unwrap();
        let p = prove_s1(&bases, &c, &big_c, &mut r).unwrap();
        assert!(verify_s1(&bases, &big_c, &p).unwrap());

        let mut bad = p.clone();
        bad.z[2] += Scalar::ONE;
        assert!(!verify_s1(&bases, &big_c, &bad).unwrap());

        let shifted = big_c + bases[0];
        assert!(!verify_s1(&bases, &shifted, &p).unwrap());

        assert!(matches!(
            verify_s1(&bases[..3], &big_c, &p),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn s2_shared_exponents() {
        let mut r = rng(3);
        // Zero exponents, identity commitments.
        let b1 = random_bases(2, &mut r);
        let b2 = random_bases(2, &mut r);
        let zeros = vec![Scalar::ZERO; 2];
        let id = G1Elem::identity();
        let p = prove_s2(&b1, &b2, &zeros, &id, &id, &mut r).unwrap();
        assert!(verify_s2(&b1, &b2, &id, &id, &p).unwrap());

        // Honest random instance.
        let c: Vec<Scalar> = (0..2).map(|_| Scalar::random(&mut r)).collect();
        let c1 = G1Elem::msm(&b1, &c).unwrap();
        let c2 = G1Elem::msm(&b2, &c).unwrap();
        let p = prove_s2(&b1, &b2, &c, &c1, &c2, &mut r).unwrap();
        assert!(verify_s2(&b1, &b2, &c1, &c2, &p).unwrap());

        // C2 built from different exponents.
        let mut c_other = c.clone();
        c_other[1] += Scalar::ONE;
        let c2_bad = G1Elem::msm(&b2, &c_other).unwrap();
        let p_bad = prove_s2(&b1, &b2, &c, &c1, &c2_bad, &mut r).unwrap();
        assert!(!verify_s2(&b1, &b2, &c1, &c2_bad, &p_bad).unwrap());
    }

    #[test]
    fn s3_linkage() {
        let mut r = rng(4);
        let g_pub = G1Elem::random(&mut r);
        let g_ij = G1Elem::random(&mut r);

        // Degenerate zero case.
        let id = G1Elem::identity();
        let p = prove_s3(&g_pub, &g_ij, &Scalar::ZERO, &Scalar::ZERO, &id, &id, &mut r);
        assert!(verify_s3(&g_pub, &g_ij, &id, &id, &p));

        // Honest: c the committed value, d the noise; verifier recomputes
        // C2 from the claimed noised value a′ = c + d.
        let c = Scalar::from_i128(123_456_789);
        let d = Scalar::random(&mut r);
        let c1 = g_pub * c;
        let a_prime = c + d;
        let c2 = g_ij * a_prime;
        let p = prove_s3(&g_pub, &g_ij, &c, &d, &c1, &c2, &mut r);
        assert!(verify_s3(&g_pub, &g_ij, &c1, &c2, &p));

        // Claimed a′ off by one: C2 recomputed from a′+1 no longer matches.
        let c2_off = g_ij * (a_prime + Scalar::ONE);
        assert!(!verify_s3(&g_pub, &g_ij, &c1, &c2_off, &p));
    }

    #[test]
    fn completeness_hundred_per_family() {
        let mut r = rng(5);
        for _ in 0..100 {
            let bases = random_bases(4, &mut r);
            let c: Vec<Scalar> = (0..4).map(|_| Scalar::random(&mut r)).collect();
            let big_c = G1Elem::msm(&bases, &c).unwrap();
            let p = prove_s1(&bases, &c, &big_c, &mut r).unwrap();
            assert!(verify_s1(&bases, &big_c, &p).unwrap());

            let b2 = random_bases(4, &mut r);
            let c1 = big_c;
            let c2 = G1Elem::msm(&b2, &c).unwrap();
            let p2 = prove_s2(&bases, &b2, &c, &c1, &c2, &mut r).unwrap();
            assert!(verify_s2(&bases, &b2, &c1, &c2, &p2).unwrap());

            let (g_pub, g_ij) = (bases[0], bases[1]);
            let (cv, dv) = (Scalar::random(&mut r), Scalar::random(&mut r));
            let (k1, k2) = (g_pub * cv, g_ij * (cv + dv));
            let p3 = prove_s3(&g_pub, &g_ij, &cv, &dv, &k1, &k2, &mut r);
            assert!(verify_s3(&g_pub, &g_ij, &k1, &k2, &p3));
        }
    }

    #[test]
    fn any_single_field_mutation_fails() {
        let mut r = rng(6);
        let delta = G1Elem::generator();
        for trial in 0..100u32 {
            let bases = random_bases(4, &mut r);
            let c: Vec<Scalar> = (0..4).map(|_| Scalar::random(&mut r)).collect();
            let big_c = G1Elem::msm(&bases, &c).unwrap();
            let p = prove_s1(&bases, &c, &big_c, &mut r).unwrap();
            let mut bad = p.clone();
            match trial % 3 {
                0 => bad.a = bad.a + delta,
                1 => bad.e += Scalar::ONE,
                _ => bad.z[trial as usize % 4] += Scalar::ONE,
            }
            assert!(!verify_s1(&bases, &big_c, &bad).unwrap(), "s1 #{trial}");

            let b2 = random_bases(4, &mut r);
            let c2 = G1Elem::msm(&b2, &c).unwrap();
            let p2 = prove_s2(&bases, &b2, &c, &big_c, &c2, &mut r).unwrap();
            let mut bad = p2.clone();
            match trial % 4 {
                0 => bad.a1 = bad.a1 + delta,
                1 => bad.a2 = bad.a2 + delta,
                2 => bad.e += Scalar::ONE,
                _ => bad.z[trial as usize % 4] += Scalar::ONE,
            }
            assert!(!verify_s2(&bases, &b2, &big_c, &c2, &bad).unwrap(), "s2 #{trial}");

            let (g_pub, g_ij) = (bases[0], bases[1]);
            let (cv, dv) = (Scalar::random(&mut r), Scalar::random(&mut r));
            let (k1, k2) = (g_pub * cv, g_ij * (cv + dv));
            let p3 = prove_s3(&g_pub, &g_ij, &cv, &dv, &k1, &k2, &mut r);
            let mut bad = p3.clone();
            match trial % 6 {
                0 => bad.a1 = bad.a1 + delta,
                1 => bad.a2 = bad.a2 + delta,
                2 => bad.a3 = bad.a3 + delta,
                3 => bad.e += Scalar::ONE,
                4 => bad.z1 += Scalar::ONE,
                _ => bad.z2 += Scalar::ONE,
            }
            assert!(!verify_s3(&g_pub, &g_ij, &k1, &k2, &bad), "s3 #{trial}");
        }
    }

    #[test]
    fn challenge_binds_every_transcript_element() {
        let mut r = rng(7);
        let bases = random_bases(3, &mut r);
        let big_c = G1Elem::random(&mut r);
        let a = G1Elem::random(&mut r);
        let e0 = challenge_s1(&bases, &big_c, &a);

        let mut other = bases.clone();
        other[1] = other[1] + G1Elem::generator();
        assert_ne!(e0, challenge_s1(&other, &big_c, &a));
        assert_ne!(e0, challenge_s1(&bases, &(big_c + G1Elem::generator()), &a));
        assert_ne!(e0, challenge_s1(&bases, &big_c, &(a + G1Elem::generator())));
    }

    #[test]
    fn serialization_round_trips() {
        let mut r = rng(8);
        let bases = random_bases(4, &mut r);
        let c: Vec<Scalar> = (0..4).map(|_| Scalar::random(&mut r)).collect();
        let big_c = G1Elem::msm(&bases, &c).unwrap();
        let p1 = prove_s1(&bases, &c, &big_c, &mut r).unwrap();
        let b2 = random_bases(4, &mut r);
        let c2 = G1Elem::msm(&b2, &c).unwrap();
        let p2 = prove_s2(&bases, &b2, &c, &big_c, &c2, &mut r).unwrap();
        let (cv, dv) = (Scalar::random(&mut r), Scalar::random(&mut r));
        let p3 = prove_s3(
            &bases[0],
            &bases[1],
            &cv,
            &dv,
            &(bases[0] * cv),
            &(bases[1] * (cv + dv)),
            &mut r,
        );

        let mut w = ByteWriter::new();
        p1.write(&mut w);
        p2.write(&mut w);
        p3.write(&mut w);
        let bytes = w.into_bytes();
        let mut rd = ByteReader::new(&bytes);
        assert_eq!(SigmaS1::read(&mut rd).unwrap(), p1);
        assert_eq!(SigmaS2::read(&mut rd).unwrap(), p2);
        assert_eq!(SigmaS3::read(&mut rd).unwrap(), p3);
        rd.finish().unwrap();
    }
}
