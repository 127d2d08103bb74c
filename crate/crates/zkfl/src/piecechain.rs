//! Noised piece proofs and the Σ-chained sequence that links them.
//!
//! Each training piece is proven once under the shared CRS, then its
//! statement is blinded with a per-slot noise list T: published slots become
//! a′_j = a_j + t_j and the verification key's gamma_abc_0 absorbs the
//! matching correction, so the original pairing check still passes while the
//! plaintext statement stays hidden. Consecutive pieces share noise — the
//! input half of T_i copies the output half of T_{i−1} — and Σ-proofs attest
//! (1) the key modification opens to known exponents and (2) that cross-piece
//! copy, which is what makes the published chain of blinded statements
//! verifiably continuous.
//!
//! A deliberate property inherited from the construction: the Groth16 proof
//! is generated on the clean statement but verified against the noised one
//! under the modified key. Nothing binds φ′ or vk′ into the proof itself;
//! the Σ-proofs partially mitigate mix-and-match across bundles but do not
//! fully close it. We keep that behavior rather than silently hardening it.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use std::path::Path;

use crate::algebra::{G1Elem, Scalar};
use crate::encode::{kind, read_framed, write_framed, ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::groth16::{PreparedProver, PreparedVk, Proof, VerificationKey};
use crate::par;
use crate::sigma::{
    prove_s1, prove_s2, verify_s1, verify_s2, SigmaS1, SigmaS2,
};

/// Per-piece noise list, one scalar per statement slot (the constant-one
/// slot is never noised). Slot count must be even: the first half noises
/// the piece's inputs, the second half its outputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TList(pub Vec<Scalar>);

/// How the pre-chain list T₀ is drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum T0Mode {
    /// Fully uniform (default): piece 1's inputs are blinded but unanchored.
    Random,
    /// Zero the half of T₀ that becomes piece 1's input noise, so the first
    /// piece's input slots are published in the clear and anyone can check
    /// them against the distributed initial model.
    PublicFirstInputs,
}

impl TList {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All-zero list; handy for the zero-noise identity.
    pub fn zero(l: usize) -> Result<Self> {
        Self::check_len(l)?;
        Ok(TList(vec![Scalar::ZERO; l]))
    }

    fn check_len(l: usize) -> Result<()> {
        if l == 0 || l % 2 != 0 {
            return Err(Error::BadStatementLayout(l));
        }
        Ok(())
    }

    /// The pre-chain list T₀.
    pub fn initial(l: usize, mode: T0Mode, mut rng: impl RngCore) -> Result<Self> {
        Self::check_len(l)?;
        let t = (0..l)
            .map(|j| {
                if mode == T0Mode::PublicFirstInputs && j >= l / 2 {
                    // The output half of T₀ is what piece 1 copies as its
                    // input noise; zeroing it anchors piece 1's inputs.
                    Scalar::ZERO
                } else {
                    Scalar::random(&mut rng)
                }
            })
            .collect();
        Ok(TList(t))
    }

    /// T_i from T_{i−1}: input half copies the predecessor's output half,
    /// output half is fresh uniform randomness.
    pub fn next(&self, mut rng: impl RngCore) -> Self {
        let l = self.0.len();
        let mut t = Vec::with_capacity(l);
        t.extend_from_slice(&self.0[l / 2..]);
        t.extend((0..l / 2).map(|_| Scalar::random(&mut rng)));
        TList(t)
    }
}

/// The two published noise accumulators for a piece: tsum¹ over the input
/// half, tsum² over the output half, both with negated exponents.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Checkers {
    pub tsum1: G1Elem,
    pub tsum2: G1Elem,
}

impl Checkers {
    /// tsum¹ = Π_{j≤l/2} gamma_abc_j^{−t_j}, tsum² = Π_{j>l/2} gamma_abc_j^{−t_j}.
    pub fn compute(vk: &VerificationKey, t: &TList) -> Result<Self> {
        let l = t.len();
        if vk.gamma_abc.len() != l + 1 {
            return Err(Error::LengthMismatch { expected: vk.gamma_abc.len() - 1, got: l });
        }
        let neg: Vec<Scalar> = t.0.iter().map(|t| -*t).collect();
        Ok(Checkers {
            tsum1: G1Elem::msm(&vk.gamma_abc[1..=l / 2], &neg[..l / 2])?,
            tsum2: G1Elem::msm(&vk.gamma_abc[l / 2 + 1..], &neg[l / 2..])?,
        })
    }
}

/// Everything a verifier needs for one piece of the chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PieceBundle {
    /// 1-based piece index.
    pub index: u32,
    pub proof: Proof,
    /// The modified key; differs from the trusted key only in gamma_abc_0.
    pub vk_prime: VerificationKey,
    /// Noised statement a′_j = a_j + t_j, length l.
    pub phi_prime: Vec<Scalar>,
    pub checkers: Checkers,
    pub s1: SigmaS1,
    /// Continuity proof; absent for the first piece.
    pub s2: Option<SigmaS2>,
}

/// Output of the noised proof generation for one piece.
#[derive(Clone, Debug)]
pub struct G16Output {
    pub vk_prime: VerificationKey,
    pub phi_prime: Vec<Scalar>,
    pub checkers: Checkers,
    pub proof: Proof,
    /// This piece's noise list, needed by the next piece and the Σ-proofs.
    pub t_list: TList,
}

/// The modified key: gamma_abc_0 absorbs both checker accumulators, every
/// other field is copied verbatim.
pub fn vk_prime(vk: &VerificationKey, checkers: &Checkers) -> VerificationKey {
    let mut out = vk.clone();
    out.gamma_abc[0] = vk.gamma_abc[0] + checkers.tsum1 + checkers.tsum2;
    out
}

/// Proves one piece against a caller-supplied noise list. Exposed so callers
/// can replay a piece with injected noise (tamper studies, zero-noise
/// checks); normal chaining goes through [`gen_g16_prf`].
pub fn gen_g16_prf_with(
    prover: &PreparedProver<'_>,
    vk: &VerificationKey,
    assignment: &[Scalar],
    t: TList,
    rng: impl RngCore,
) -> Result<G16Output> {
    let phi = prover.constraints().statement(assignment);
    if phi.len() != t.len() {
        return Err(Error::LengthMismatch { expected: phi.len(), got: t.len() });
    }
    TList::check_len(t.len())?;
    let proof = prover.prove(assignment, rng)?;
    let checkers = Checkers::compute(vk, &t)?;
    let phi_prime = phi.iter().zip(&t.0).map(|(a, t)| *a + t).collect();
    Ok(G16Output { vk_prime: vk_prime(vk, &checkers), phi_prime, checkers, proof, t_list: t })
}

/// Proves one piece: derives T_i from T_{i−1}, proves the clean statement,
/// publishes the noised one plus the modified key and checkers.
pub fn gen_g16_prf(
    prover: &PreparedProver<'_>,
    vk: &VerificationKey,
    assignment: &[Scalar],
    t_prev: &TList,
    mut rng: impl RngCore,
) -> Result<G16Output> {
    let phi_len = prover.constraints().statement(assignment).len();
    if t_prev.len() != phi_len {
        return Err(Error::LengthMismatch { expected: phi_len, got: t_prev.len() });
    }
    let t = t_prev.next(&mut rng);
    gen_g16_prf_with(prover, vk, assignment, t, rng)
}

/// The two Σ-proofs for a piece: s¹ opens the key modification
/// C = vk′.gamma_abc_0 · vk.gamma_abc_0^{−1} to exponents {−t_j} over bases
/// gamma_abc_{1..l}; s² (absent for the first piece) shows the same exponent
/// prefix opens tsum¹_i over the input-half bases and tsum²_{i−1} over the
/// output-half bases, which is exactly the cross-piece noise copy.
pub fn gen_con_prf(
    vk: &VerificationKey,
    vk_prime: &VerificationKey,
    t: &TList,
    tsum1: &G1Elem,
    tsum2_prev: Option<&G1Elem>,
    mut rng: impl RngCore,
) -> Result<(SigmaS1, Option<SigmaS2>)> {
    let l = t.len();
    if vk.gamma_abc.len() != l + 1 {
        return Err(Error::LengthMismatch { expected: vk.gamma_abc.len() - 1, got: l });
    }
    let c: Vec<Scalar> = t.0.iter().map(|t| -*t).collect();
    let big_c = vk_prime.gamma_abc[0] - vk.gamma_abc[0];
    let s1 = prove_s1(&vk.gamma_abc[1..], &c, &big_c, &mut rng)?;
    let s2 = match tsum2_prev {
        None => None,
        Some(prev) => Some(prove_s2(
            &vk.gamma_abc[1..=l / 2],
            &vk.gamma_abc[l / 2 + 1..],
            &c[..l / 2],
            tsum1,
            prev,
            &mut rng,
        )?),
    };
    Ok((s1, s2))
}

/// Checks a piece's Σ-proofs and key shape. True iff
/// (a) gamma_abc_0 · tsum¹_i · tsum²_i = vk′.gamma_abc_0,
/// (b) s¹ opens vk′.gamma_abc_0 · vk.gamma_abc_0^{−1},
/// (c) s² links tsum¹_i to tsum²_{i−1} (skipped for the first piece), and
/// (d) vk′ agrees with the trusted key everywhere except gamma_abc_0 —
/// the modification is only ever allowed to touch that one element, and
/// without (d) a bundle could smuggle in a wholly different key.
pub fn vrf_con_prf(
    s1: &SigmaS1,
    s2: Option<&SigmaS2>,
    vk: &VerificationKey,
    vk_prime: &VerificationKey,
    tsum1: &G1Elem,
    tsum2: &G1Elem,
    tsum2_prev: Option<&G1Elem>,
) -> bool {
    let l = vk.gamma_abc.len() - 1;
    let same_but_gamma0 = vk_prime.circuit_hash == vk.circuit_hash
        && vk_prime.alpha_g1 == vk.alpha_g1
        && vk_prime.beta_g2 == vk.beta_g2
        && vk_prime.gamma_g2 == vk.gamma_g2
        && vk_prime.delta_g2 == vk.delta_g2
        && vk_prime.gamma_abc.len() == l + 1
        && vk_prime.gamma_abc[1..] == vk.gamma_abc[1..];
    if !same_but_gamma0 || l == 0 || l % 2 != 0 {
        return false;
    }
    if vk.gamma_abc[0] + *tsum1 + *tsum2 != vk_prime.gamma_abc[0] {
        return false;
    }
    let big_c = vk_prime.gamma_abc[0] - vk.gamma_abc[0];
    if !verify_s1(&vk.gamma_abc[1..], &big_c, s1).unwrap_or(false) {
        return false;
    }
    match (s2, tsum2_prev) {
        (None, None) => true,
        (Some(s2), Some(prev)) => verify_s2(
            &vk.gamma_abc[1..=l / 2],
            &vk.gamma_abc[l / 2 + 1..],
            tsum1,
            prev,
            s2,
        )
        .unwrap_or(false),
        _ => false,
    }
}

/// Why a piece was rejected; `Ok(())` means it passed.
fn check_piece(
    prepared: &PreparedVk,
    vk: &VerificationKey,
    bundle: &PieceBundle,
    tsum2_prev: Option<&G1Elem>,
    first: bool,
) -> std::result::Result<(), &'static str> {
    if first != bundle.s2.is_none() {
        return Err("continuity proof presence does not match chain position");
    }
    let pvk = prepared.with_gamma0(bundle.vk_prime.gamma_abc[0]);
    if !pvk.verify(&bundle.phi_prime, &bundle.proof).unwrap_or(false) {
        return Err("proof does not verify under the modified key");
    }
    if !vrf_con_prf(
        &bundle.s1,
        bundle.s2.as_ref(),
        vk,
        &bundle.vk_prime,
        &bundle.checkers.tsum1,
        &bundle.checkers.tsum2,
        tsum2_prev,
    ) {
        return Err("key-modification or continuity proof rejected");
    }
    Ok(())
}

fn chain_work<'a>(
    bundles: &'a [PieceBundle],
) -> Result<Vec<(usize, &'a PieceBundle, Option<&'a G1Elem>)>> {
    if bundles.is_empty() {
        return Err(Error::EmptyChain);
    }
    Ok(bundles
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let prev = (k > 0).then(|| &bundles[k - 1].checkers.tsum2);
            (k, b, prev)
        })
        .collect())
}

/// First failing piece as (1-based position, reason), or None if the chain
/// verifies. Bundle order is the chain order; each piece's continuity proof
/// is checked against its predecessor's published tsum².
pub fn diagnose_chain(
    bundles: &[PieceBundle],
    vk: &VerificationKey,
) -> Result<Option<(u32, &'static str)>> {
    let work = chain_work(bundles)?;
    let prepared = PreparedVk::new(vk);
    let verdicts = par::map(&work, |(k, bundle, prev)| {
        check_piece(&prepared, vk, bundle, *prev, *k == 0).err()
    });
    Ok(verdicts
        .into_iter()
        .enumerate()
        .find_map(|(k, err)| err.map(|reason| (k as u32 + 1, reason))))
}

/// Verifies the whole chain: every piece proof under its modified key plus
/// every Σ-link. Distinct pieces are checked in parallel.
pub fn verify_piece_chain(bundles: &[PieceBundle], vk: &VerificationKey) -> Result<bool> {
    Ok(diagnose_chain(bundles, vk)?.is_none())
}

/// Sequential twin of [`verify_piece_chain`], for benchmarks.
pub fn verify_piece_chain_seq(bundles: &[PieceBundle], vk: &VerificationKey) -> Result<bool> {
    let work = chain_work(bundles)?;
    let prepared = PreparedVk::new(vk);
    for (k, bundle, prev) in work {
        if check_piece(&prepared, vk, bundle, prev, k == 0).is_err() {
            return Ok(false);
        }
    }
    Ok(true)
}

fn piece_seeds(n: usize, mut rng: impl RngCore) -> Vec<[u8; 32]> {
    (0..n)
        .map(|_| {
            let mut s = [0u8; 32];
            rng.fill_bytes(&mut s);
            s
        })
        .collect()
}

fn prove_one(
    prover: &PreparedProver<'_>,
    vk: &VerificationKey,
    index: u32,
    assignment: &[Scalar],
    t: &TList,
    t_prev: Option<&TList>,
    seed: [u8; 32],
) -> Result<PieceBundle> {
    let mut rng = ChaCha20Rng::from_seed(seed);
    let g16 = gen_g16_prf_with(prover, vk, assignment, t.clone(), &mut rng)?;
    let tsum2_prev = match t_prev {
        None => None,
        Some(tp) => Some(Checkers::compute(vk, tp)?.tsum2),
    };
    let (s1, s2) = gen_con_prf(
        vk,
        &g16.vk_prime,
        &g16.t_list,
        &g16.checkers.tsum1,
        tsum2_prev.as_ref(),
        &mut rng,
    )?;
    Ok(PieceBundle {
        index,
        proof: g16.proof,
        vk_prime: g16.vk_prime,
        phi_prime: g16.phi_prime,
        checkers: g16.checkers,
        s1,
        s2,
    })
}

/// Proves a whole chain of pieces. Noise lists are chained sequentially
/// (cheap), then the per-piece work — one proof plus Σ-proofs each — fans
/// out in parallel with per-piece deterministic RNG streams, so the result
/// depends only on the inputs and `rng`'s seed, not on scheduling.
pub fn prove_pieces(
    prover: &PreparedProver<'_>,
    vk: &VerificationKey,
    assignments: &[Vec<Scalar>],
    t0: &TList,
    mut rng: impl RngCore,
) -> Result<Vec<PieceBundle>> {
    let work = piece_work(assignments, t0, &mut rng)?;
    par::try_map(&work, |(i, assignment, t, t_prev, seed)| {
        prove_one(prover, vk, *i as u32 + 1, assignment, t, t_prev.as_ref(), *seed)
    })
}

/// Sequential twin of [`prove_pieces`]; bit-identical output.
pub fn prove_pieces_seq(
    prover: &PreparedProver<'_>,
    vk: &VerificationKey,
    assignments: &[Vec<Scalar>],
    t0: &TList,
    mut rng: impl RngCore,
) -> Result<Vec<PieceBundle>> {
    let work = piece_work(assignments, t0, &mut rng)?;
    par::try_map_seq(&work, |(i, assignment, t, t_prev, seed)| {
        prove_one(prover, vk, *i as u32 + 1, assignment, t, t_prev.as_ref(), *seed)
    })
}

type PieceWork<'a> = (usize, &'a [Scalar], TList, Option<TList>, [u8; 32]);

fn piece_work<'a>(
    assignments: &'a [Vec<Scalar>],
    t0: &TList,
    mut rng: impl RngCore,
) -> Result<Vec<PieceWork<'a>>> {
    if assignments.is_empty() {
        return Err(Error::EmptyChain);
    }
    let mut t_lists = Vec::with_capacity(assignments.len());
    let mut prev = t0.clone();
    for _ in assignments {
        let t = prev.next(&mut rng);
        t_lists.push(t.clone());
        prev = t;
    }
    let seeds = piece_seeds(assignments.len(), &mut rng);
    Ok(assignments
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let t_prev = (i > 0).then(|| t_lists[i - 1].clone());
            (i, a.as_slice(), t_lists[i].clone(), t_prev, seeds[i])
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

impl PieceBundle {
    /// The modified key differs from the trusted key only in gamma_abc_0,
    /// so files carry just that element; `read` rebuilds the full key.
    pub fn write(&self, w: &mut ByteWriter) {
        w.put_u32(self.index);
        w.put_fixed(&self.proof.to_bytes());
        w.put_fixed(&self.vk_prime.gamma_abc[0].to_compressed());
        w.put_u32(self.phi_prime.len() as u32);
        for s in &self.phi_prime {
            w.put_fixed(&s.to_be_bytes());
        }
        w.put_fixed(&self.checkers.tsum1.to_compressed());
        w.put_fixed(&self.checkers.tsum2.to_compressed());
        self.s1.write(w);
        match &self.s2 {
            None => w.put_u8(0),
            Some(s2) => {
                w.put_u8(1);
                s2.write(w);
            }
        }
    }

    pub fn read(r: &mut ByteReader, vk: &VerificationKey) -> Result<Self> {
        let index = r.get_u32()?;
        let proof = Proof::read(r)?;
        let gamma0 = G1Elem::from_compressed(&r.get_fixed::<48>()?)?;
        let n = r.get_u32()? as usize;
        let phi_prime = (0..n)
            .map(|_| Scalar::from_be_bytes(&r.get_fixed::<32>()?))
            .collect::<Result<Vec<_>>>()?;
        let checkers = Checkers {
            tsum1: G1Elem::from_compressed(&r.get_fixed::<48>()?)?,
            tsum2: G1Elem::from_compressed(&r.get_fixed::<48>()?)?,
        };
        let s1 = SigmaS1::read(r)?;
        let s2 = match r.get_u8()? {
            0 => None,
            1 => Some(SigmaS2::read(r)?),
            _ => return Err(Error::BadFrame("bundle continuity-proof flag")),
        };
        let mut vk_prime = vk.clone();
        if vk_prime.gamma_abc.is_empty() {
            return Err(Error::BadFrame("verification key without statement slots"));
        }
        vk_prime.gamma_abc[0] = gamma0;
        Ok(PieceBundle { index, proof, vk_prime, phi_prime, checkers, s1, s2 })
    }
}

/// Writes a packed archive of bundles.
pub fn save_bundles(path: &Path, bundles: &[PieceBundle]) -> Result<()> {
    let mut w = ByteWriter::new();
    w.put_u32(bundles.len() as u32);
    for b in bundles {
        b.write(&mut w);
    }
    write_framed(path, kind::BUNDLES, &w.into_bytes())
}

/// Reads a packed archive of bundles; modified keys are rebuilt from the
/// trusted key plus each bundle's stored gamma_abc_0.
pub fn load_bundles(path: &Path, vk: &VerificationKey) -> Result<Vec<PieceBundle>> {
    let bytes = read_framed(path, kind::BUNDLES)?;
    let mut r = ByteReader::new(&bytes);
    let n = r.get_u32()? as usize;
    let bundles = (0..n)
        .map(|_| PieceBundle::read(&mut r, vk))
        .collect::<Result<Vec<_>>>()?;
    r.finish()?;
    Ok(bundles)
}
