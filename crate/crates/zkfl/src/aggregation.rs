//! Masked secure sum with linkage proofs.
//!
//! Trainers sit on a ring and exchange one-time masks; each submits Paillier
//! ciphertexts of its masked model values, a commitment C = g_pub^a to each
//! clean value, and a Σ³ proof linking that commitment to the noised
//! statement slot published with its final piece. The contract folds the
//! ciphertexts — masks telescope away — and the decrypted sum is checked
//! against the product of everyone's commitments, so the aggregate is
//! correct unless every commitment was coordinated to lie.
//!
//! Division by the trainer count rarely lands on an integer, so the round
//! publishes the exact sum and count; means are derived client-side with
//! round-half-away-from-zero and the remainder is kept alongside.

use num_bigint::{BigInt, RandBigInt};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::algebra::{hash_to_g1, BigNat, G1Elem, Scalar};
use crate::encode::{
    kind, read_framed, write_framed, ByteReader, ByteWriter, Transcript, DOMAIN_GENERATOR,
};
use crate::error::{Error, Result};
use crate::paillier::{
    add, check_capacity, decrypt_signed, encrypt_signed, PaillierCiphertext, PaillierPublicKey,
    PaillierSecretKey,
};
use crate::par;
use crate::piecechain::TList;
use crate::sigma::{prove_s3, verify_s3, SigmaS3};

/// Which statement slots enter the aggregate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AggregationScope {
    /// Only the output half — the updated model parameters (default).
    OutputHalf,
    /// Every statement slot, inputs included.
    FullStatement,
}

/// Fixed parameters of one aggregation round.
#[derive(Clone, Debug)]
pub struct RoundContext {
    pub round: u64,
    pub n_trainers: u32,
    pub scope: AggregationScope,
    /// Statement length l of the final piece (inputs + outputs).
    pub statement_len: usize,
    /// Declared bound on |a| for every aggregated value, in quantized units.
    pub max_abs: u128,
    /// Fixed-point scale exponent the aggregated values live at.
    pub rat: u32,
    /// Public commitment base, derived from the round id.
    pub g_pub: G1Elem,
}

impl RoundContext {
    /// Builds the context and checks the Paillier modulus can hold the
    /// worst-case masked sum.
    pub fn new(
        round: u64,
        n_trainers: u32,
        scope: AggregationScope,
        statement_len: usize,
        max_abs: u128,
        rat: u32,
        pk: &PaillierPublicKey,
    ) -> Result<Self> {
        if n_trainers == 0 {
            return Err(Error::IncompleteRound { have: 0, want: 1 });
        }
        if statement_len == 0 || statement_len % 2 != 0 {
            return Err(Error::BadStatementLayout(statement_len));
        }
        check_capacity(pk, n_trainers as u64, max_abs)?;
        let mut t = Transcript::new(DOMAIN_GENERATOR);
        t.append(b"g-pub");
        t.append_u64(round);
        Ok(RoundContext {
            round,
            n_trainers,
            scope,
            statement_len,
            max_abs,
            rat,
            g_pub: hash_to_g1(t.as_bytes()),
        })
    }

    /// Statement slot indices (0-based) covered by the scope.
    pub fn slots(&self) -> std::ops::Range<usize> {
        match self.scope {
            AggregationScope::OutputHalf => self.statement_len / 2..self.statement_len,
            AggregationScope::FullStatement => 0..self.statement_len,
        }
    }

    pub fn slot_count(&self) -> usize {
        self.slots().len()
    }

    /// Per-(trainer, slot) commitment base, hash-derived so nobody can
    /// grind generators. `slot` is the statement slot index.
    pub fn generator(&self, trainer: u32, slot: usize) -> G1Elem {
        let mut t = Transcript::new(DOMAIN_GENERATOR);
        t.append(b"g-slot");
        t.append_u64(self.round);
        t.append_u64(trainer as u64);
        t.append_u64(slot as u64);
        hash_to_g1(t.as_bytes())
    }
}

// ---------------------------------------------------------------------------
// Masks
// ---------------------------------------------------------------------------

/// Ring masks: row i holds trainer i's shared values s_{i,j} (1-based
/// trainers), and the ring closes with s_0 = s_n. Trainer i applies
/// s_i − s_{i−1}, so the per-slot sum over all trainers telescopes to zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskMatrix {
    rows: Vec<Vec<BigNat>>,
}

impl MaskMatrix {
    pub fn n_trainers(&self) -> usize {
        self.rows.len()
    }

    /// Row i for i in 0..=n, with row 0 aliasing row n (ring convention).
    pub fn row(&self, i: usize) -> &[BigNat] {
        if i == 0 {
            &self.rows[self.rows.len() - 1]
        } else {
            &self.rows[i - 1]
        }
    }

    /// Trainer i's additive mask for slot index k: s_{i,k} − s_{i−1,k}.
    pub fn diff(&self, i: usize, k: usize) -> BigInt {
        BigInt::from(self.row(i)[k].clone()) - BigInt::from(self.row(i - 1)[k].clone())
    }
}

/// Trainer-visible record of everything a party observed; used by privacy
/// tests to assert who saw what.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ViewLog {
    pub party: String,
    pub entries: Vec<String>,
}

impl ViewLog {
    fn new(party: impl Into<String>) -> Self {
        ViewLog { party: party.into(), entries: Vec::new() }
    }

    fn note(&mut self, entry: String) {
        self.entries.push(entry);
    }
}

/// Samples the ring masks. Masks live in [0, n/4) of the Paillier plaintext
/// space so any masked value a + s_i − s_{i−1} stays within (−n/2, n/2)
/// given |a| < n/4.
pub fn exchange_masks(
    ctx: &RoundContext,
    pk: &PaillierPublicKey,
    mut rng: impl RngCore,
) -> MaskMatrix {
    let bound = &pk.n >> 2;
    let rows = (0..ctx.n_trainers)
        .map(|_| (0..ctx.slot_count()).map(|_| rng.gen_biguint_below(&bound)).collect())
        .collect();
    MaskMatrix { rows }
}

/// [`exchange_masks`] plus per-trainer view logs: trainer i learns only its
/// own row and its ring predecessor's.
pub fn exchange_masks_logged(
    ctx: &RoundContext,
    pk: &PaillierPublicKey,
    rng: impl RngCore,
) -> (MaskMatrix, Vec<ViewLog>) {
    let masks = exchange_masks(ctx, pk, rng);
    let n = ctx.n_trainers as usize;
    let mut views = Vec::with_capacity(n);
    for i in 1..=n {
        let mut v = ViewLog::new(format!("trainer-{i}"));
        let prev = if i == 1 { n } else { i - 1 };
        for row in [prev, i] {
            for (k, s) in masks.row(row).iter().enumerate() {
                v.note(format!("mask row={row} slot={k} value={s:x}"));
            }
        }
        views.push(v);
    }
    (masks, views)
}

// ---------------------------------------------------------------------------
// Submission
// ---------------------------------------------------------------------------

/// One trainer's round contribution: ciphertexts of masked values plus the
/// commitment/linkage material, one entry per aggregated slot.
#[derive(Clone, Debug, PartialEq)]
pub struct Submission {
    /// 1-based trainer index on the ring.
    pub trainer: u32,
    pub ciphertexts: Vec<PaillierCiphertext>,
    pub s3: Vec<SigmaS3>,
    /// Per-slot commitment bases g_{i,j} (hash-derived, republished).
    pub g: Vec<G1Elem>,
    /// Per-slot commitments C_{i,j} = g_pub^{a_{i,j}}.
    pub commitments: Vec<G1Elem>,
}

/// Builds trainer i's submission from its final piece: clean statement
/// values `phi` (full length l), that piece's noise list, and the trainer's
/// two mask rows. Produces one ciphertext + proof per aggregated slot.
pub fn submit(
    ctx: &RoundContext,
    pk: &PaillierPublicKey,
    trainer: u32,
    phi: &[i128],
    t: &TList,
    own_masks: &[BigNat],
    prev_masks: &[BigNat],
    mut rng: impl RngCore,
) -> Result<Submission> {
    if phi.len() != ctx.statement_len || t.len() != ctx.statement_len {
        return Err(Error::LengthMismatch { expected: ctx.statement_len, got: phi.len().max(t.len()) });
    }
    let slots = ctx.slots();
    if own_masks.len() != slots.len() || prev_masks.len() != slots.len() {
        return Err(Error::LengthMismatch { expected: slots.len(), got: own_masks.len() });
    }
    let mut ciphertexts = Vec::with_capacity(slots.len());
    let mut s3 = Vec::with_capacity(slots.len());
    let mut g = Vec::with_capacity(slots.len());
    let mut commitments = Vec::with_capacity(slots.len());
    for (k, j) in slots.enumerate() {
        let a = phi[j];
        if a.unsigned_abs() > ctx.max_abs {
            return Err(Error::Capacity(format!(
                "slot {j} value {a} exceeds declared bound {}",
                ctx.max_abs
            )));
        }
        let masked = BigInt::from(a) + BigInt::from(own_masks[k].clone())
            - BigInt::from(prev_masks[k].clone());
        ciphertexts.push(encrypt_signed(pk, &masked, &mut rng)?);

        let g_ij = ctx.generator(trainer, j);
        let c = Scalar::from_i128(a);
        let d = t.0[j];
        let c1 = ctx.g_pub * c;
        let c2 = g_ij * (c + d);
        s3.push(prove_s3(&ctx.g_pub, &g_ij, &c, &d, &c1, &c2, &mut rng));
        g.push(g_ij);
        commitments.push(c1);
    }
    Ok(Submission { trainer, ciphertexts, s3, g, commitments })
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

/// The published round result: exact sums, the trainer count, and the
/// client-side means with their rounding remainders.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlobalModel {
    /// Σ_i a_{i,j} per aggregated slot, exact.
    pub sum: Vec<i128>,
    pub count: u32,
    /// Fixed-point scale the values live at.
    pub rat: u32,
    /// round-half-away-from-zero(sum / count).
    pub mean: Vec<i128>,
    /// sum − mean·count, so mean·count + remainder reconstructs the sum.
    pub remainder: Vec<i128>,
}

/// Nearest integer to `num / den` with ties away from zero; `den` > 0.
pub fn round_half_away(num: i128, den: i128) -> i128 {
    debug_assert!(den > 0);
    let q = num / den;
    let r = num % den;
    if 2 * r.abs() >= den {
        q + num.signum()
    } else {
        q
    }
}

fn sorted_by_trainer(ctx: &RoundContext, submissions: &[Submission]) -> Result<Vec<usize>> {
    let want = ctx.n_trainers as usize;
    if submissions.len() != want {
        return Err(Error::IncompleteRound { have: submissions.len(), want });
    }
    let mut order: Vec<usize> = (0..want).collect();
    order.sort_by_key(|&i| submissions[i].trainer);
    for (pos, &i) in order.iter().enumerate() {
        let s = &submissions[i];
        if s.trainer as usize != pos + 1 {
            return Err(Error::IncompleteRound { have: submissions.len(), want });
        }
        let k = ctx.slot_count();
        if s.ciphertexts.len() != k || s.s3.len() != k || s.g.len() != k || s.commitments.len() != k
        {
            return Err(Error::LengthMismatch { expected: k, got: s.ciphertexts.len() });
        }
    }
    Ok(order)
}

/// Per-slot homomorphic fold of all submissions — the contract-side sum.
pub fn fold_ciphertexts(
    ctx: &RoundContext,
    submissions: &[Submission],
) -> Result<Vec<PaillierCiphertext>> {
    let order = sorted_by_trainer(ctx, submissions)?;
    (0..ctx.slot_count())
        .map(|k| {
            let mut acc = submissions[order[0]].ciphertexts[k].clone();
            for &i in &order[1..] {
                acc = add(&acc, &submissions[i].ciphertexts[k])?;
            }
            Ok(acc)
        })
        .collect()
}

/// Decrypts the folded ciphertexts into exact slot sums; masks have
/// telescoped away. A decrypted magnitude beyond count·max_abs means the
/// plaintext space wrapped — rejected, never returned silently.
pub fn decrypt_sums(
    ctx: &RoundContext,
    pk: &PaillierPublicKey,
    sk: &PaillierSecretKey,
    cipher_sums: &[PaillierCiphertext],
) -> Result<Vec<i128>> {
    let bound = BigInt::from(ctx.n_trainers) * BigInt::from(ctx.max_abs);
    cipher_sums
        .iter()
        .map(|ct| {
            let v = decrypt_signed(sk, pk, ct)?;
            if v.magnitude() > bound.magnitude() {
                return Err(Error::Capacity(format!(
                    "decrypted sum magnitude exceeds {bound}: plaintext space wrapped"
                )));
            }
            i128::try_from(&v).map_err(|_| Error::Capacity("sum exceeds i128".into()))
        })
        .collect()
}

/// Full round aggregation: fold, decrypt, and derive the published model.
pub fn aggregate(
    ctx: &RoundContext,
    pk: &PaillierPublicKey,
    sk: &PaillierSecretKey,
    submissions: &[Submission],
) -> Result<GlobalModel> {
    let sums = decrypt_sums(ctx, pk, sk, &fold_ciphertexts(ctx, submissions)?)?;
    Ok(global_model_from_sums(ctx, &sums))
}

/// Derives the published means/remainders from exact sums.
pub fn global_model_from_sums(ctx: &RoundContext, sums: &[i128]) -> GlobalModel {
    let n = ctx.n_trainers as i128;
    let mean: Vec<i128> = sums.iter().map(|&s| round_half_away(s, n)).collect();
    let remainder = sums.iter().zip(&mean).map(|(s, m)| s - m * n).collect();
    GlobalModel { sum: sums.to_vec(), count: ctx.n_trainers, rat: ctx.rat, mean, remainder }
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

/// Checks the round: per slot, the product of all commitments must equal
/// g_pub^{sum}, every commitment base must match its hash derivation, and
/// every Σ³ proof must verify against C₂ = g_{i,j}^{a′_{i,j}} recomputed
/// from the trainer's published noised statement. False on any failure.
pub fn vrf_sum_prf(
    ctx: &RoundContext,
    submissions: &[Submission],
    phi_primes: &[Vec<Scalar>],
    sums: &[i128],
) -> bool {
    let order = match sorted_by_trainer(ctx, submissions) {
        Ok(o) => o,
        Err(_) => return false,
    };
    if phi_primes.len() != order.len() || sums.len() != ctx.slot_count() {
        return false;
    }
    if phi_primes.iter().any(|p| p.len() != ctx.statement_len) {
        return false;
    }

    // Product check per slot: Π_i C_{i,j} = g_pub^{sum_j}.
    for (k, &sum) in sums.iter().enumerate() {
        let mut prod = G1Elem::identity();
        for &i in &order {
            prod = prod + submissions[i].commitments[k];
        }
        if prod != ctx.g_pub * Scalar::from_i128(sum) {
            return false;
        }
    }

    // Linkage checks, parallel over trainers.
    let work: Vec<(usize, usize)> =
        order.iter().enumerate().map(|(pos, &i)| (pos, i)).collect();
    let ok = par::map(&work, |&(pos, i)| {
        let s = &submissions[i];
        ctx.slots().enumerate().all(|(k, j)| {
            let g_ij = ctx.generator(s.trainer, j);
            if s.g[k] != g_ij {
                return false;
            }
            let c2 = g_ij * phi_primes[pos][j];
            verify_s3(&ctx.g_pub, &g_ij, &s.commitments[k], &c2, &s.s3[k])
        })
    });
    ok.into_iter().all(|b| b)
}

/// What the aggregation publisher gets to see: ciphertexts, commitments,
/// proofs, and noised statements — never a clean model value.
pub fn publisher_view(
    ctx: &RoundContext,
    submissions: &[Submission],
    phi_primes: &[Vec<Scalar>],
) -> ViewLog {
    let mut v = ViewLog::new("publisher");
    for s in submissions {
        for (k, ct) in s.ciphertexts.iter().enumerate() {
            v.note(format!("ciphertext trainer={} slot={k} value={:x}", s.trainer, ct.c));
        }
        for (k, c) in s.commitments.iter().enumerate() {
            v.note(format!(
                "commitment trainer={} slot={k} point={}",
                s.trainer,
                hex::encode(c.to_compressed())
            ));
        }
        for (k, g) in s.g.iter().enumerate() {
            v.note(format!(
                "generator trainer={} slot={k} point={}",
                s.trainer,
                hex::encode(g.to_compressed())
            ));
        }
        for (k, p) in s.s3.iter().enumerate() {
            let mut w = ByteWriter::new();
            p.write(&mut w);
            v.note(format!(
                "sigma3 trainer={} slot={k} bytes={}",
                s.trainer,
                hex::encode(w.into_bytes())
            ));
        }
    }
    for (i, phi) in phi_primes.iter().enumerate() {
        for (j, a) in phi.iter().enumerate() {
            v.note(format!(
                "phi-prime trainer={} slot={j} value={}",
                i + 1,
                hex::encode(a.to_be_bytes())
            ));
        }
    }
    v.note(format!("round={} n={} scope={:?}", ctx.round, ctx.n_trainers, ctx.scope));
    v
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

impl Submission {
    pub fn write(&self, w: &mut ByteWriter) {
        w.put_u32(self.trainer);
        w.put_u32(self.ciphertexts.len() as u32);
        for ct in &self.ciphertexts {
            ct.write(w);
        }
        for p in &self.s3 {
            p.write(w);
        }
        for g in &self.g {
            w.put_fixed(&g.to_compressed());
        }
        for c in &self.commitments {
            w.put_fixed(&c.to_compressed());
        }
    }

    pub fn read(r: &mut ByteReader, pk: &PaillierPublicKey) -> Result<Self> {
        let trainer = r.get_u32()?;
        let k = r.get_u32()? as usize;
        let ciphertexts =
            (0..k).map(|_| PaillierCiphertext::read(r, pk)).collect::<Result<Vec<_>>>()?;
        let s3 = (0..k).map(|_| SigmaS3::read(r)).collect::<Result<Vec<_>>>()?;
        let g = (0..k)
            .map(|_| G1Elem::from_compressed(&r.get_fixed::<48>()?))
            .collect::<Result<Vec<_>>>()?;
        let commitments = (0..k)
            .map(|_| G1Elem::from_compressed(&r.get_fixed::<48>()?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Submission { trainer, ciphertexts, s3, g, commitments })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = ByteWriter::new();
        self.write(&mut w);
        write_framed(path, kind::SUBMISSION, &w.into_bytes())
    }

    pub fn load(path: &Path, pk: &PaillierPublicKey) -> Result<Self> {
        let bytes = read_framed(path, kind::SUBMISSION)?;
        let mut r = ByteReader::new(&bytes);
        let s = Submission::read(&mut r, pk)?;
        r.finish()?;
        Ok(s)
    }
}

/// Mask rows travel between processes (one file per ring edge).
pub fn save_mask_row(path: &Path, row: &[BigNat]) -> Result<()> {
    let mut w = ByteWriter::new();
    w.put_u32(row.len() as u32);
    for s in row {
        w.put_var(&s.to_bytes_be());
    }
    write_framed(path, kind::MASKS, &w.into_bytes())
}

pub fn load_mask_row(path: &Path) -> Result<Vec<BigNat>> {
    let bytes = read_framed(path, kind::MASKS)?;
    let mut r = ByteReader::new(&bytes);
    let n = r.get_u32()? as usize;
    let row = (0..n)
        .map(|_| Ok(BigNat::from_bytes_be(&r.get_var()?)))
        .collect::<Result<Vec<_>>>()?;
    r.finish()?;
    Ok(row)
}
