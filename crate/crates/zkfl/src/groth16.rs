//! The core zk-SNARK: trusted setup over a QAP, randomized proving,
//! pairing-equation verification, and trapdoor simulation.
//!
//! Verification checks e(A,B) = e(G^α,H^β) · e(Π_j gamma_abc_j^{a_j}, H^γ)
//! · e(C,H^δ) with a_0 = 1. The piece-chaining layer later swaps
//! gamma_abc_0 for a noised variant, so [`PreparedVk`] exposes exactly that
//! substitution without re-preparing the pairing inputs.

use std::path::Path;

use rand::RngCore;

use crate::algebra::{
    multi_pairing, pairing, G1Elem, G2Elem, GtElem, PreparedG2, Scalar,
};
use crate::encode::{self, kind, ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::par;
use crate::poly::{self, Poly};
use crate::r1cs::{ConstraintSystem, Qap};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProvingKey {
    pub circuit_hash: [u8; 32],
    pub alpha_g1: G1Elem,
    pub beta_g1: G1Elem,
    pub beta_g2: G2Elem,
    pub delta_g1: G1Elem,
    pub delta_g2: G2Elem,
    /// G^{x^i} for i = 0..n−1: enough for any polynomial below deg t.
    pub x_powers_g1: Vec<G1Elem>,
    /// H^{x^i}, same range.
    pub x_powers_g2: Vec<G2Elem>,
    /// G^{(β·u_i(x)+α·v_i(x)+w_i(x))/δ} for witness wires i = l+1..m.
    pub witness_query: Vec<G1Elem>,
    /// G^{x^i·t(x)/δ} for i = 0..n−2, the quotient-polynomial basis.
    pub h_query: Vec<G1Elem>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationKey {
    pub circuit_hash: [u8; 32],
    pub alpha_g1: G1Elem,
    pub beta_g2: G2Elem,
    pub gamma_g2: G2Elem,
    pub delta_g2: G2Elem,
    /// G^{(β·u_j(x)+α·v_j(x)+w_j(x))/γ} for statement wires j = 0..l.
    pub gamma_abc: Vec<G1Elem>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Proof {
    pub a: G1Elem,
    pub b: G2Elem,
    pub c: G1Elem,
}

/// Setup's toxic waste; retained only for simulation and tests.
#[derive(Clone, Debug)]
pub struct Trapdoor {
    pub alpha: Scalar,
    pub beta: Scalar,
    pub gamma: Scalar,
    pub delta: Scalar,
    pub x: Scalar,
}

impl Proof {
    pub const BYTES: usize = 48 + 96 + 48;

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::BYTES);
        out.extend_from_slice(&self.a.to_compressed());
        out.extend_from_slice(&self.b.to_compressed());
        out.extend_from_slice(&self.c.to_compressed());
        out
    }

    pub fn read(r: &mut ByteReader) -> Result<Self> {
        Ok(Proof {
            a: G1Elem::from_compressed(&r.get_fixed::<48>()?)?,
            b: G2Elem::from_compressed(&r.get_fixed::<96>()?)?,
            c: G1Elem::from_compressed(&r.get_fixed::<48>()?)?,
        })
    }
}

// ---------------------------------------------------------------------------
// Setup
// ---------------------------------------------------------------------------

/// Evaluates β·u_j(x) + α·v_j(x) + w_j(x) for one wire.
fn wire_poly_at(qap: &Qap, j: usize, alpha: &Scalar, beta: &Scalar, x: &Scalar) -> Scalar {
    *beta * qap.u[j].eval(x) + *alpha * qap.v[j].eval(x) + qap.w[j].eval(x)
}

/// Samples a fresh common reference string for the circuit behind `qap`.
/// Statement length is the QAP's; `circuit_hash` binds both keys to the
/// exact constraint system so mismatched key/circuit pairs fail fast.
pub fn setup(
    qap: &Qap,
    circuit_hash: [u8; 32],
    mut rng: impl RngCore,
) -> Result<(ProvingKey, VerificationKey, Trapdoor)> {
    let n = qap.num_constraints;
    if n == 0 || qap.t.degree().map_or(true, |d| d == 0) {
        return Err(Error::DegenerateCircuit("vanishing polynomial is constant"));
    }
    let l = qap.num_statement;
    let m1 = qap.num_wires();

    // All five trapdoor elements non-zero and x off the constraint domain.
    let td = loop {
        let td = Trapdoor {
            alpha: Scalar::random(&mut rng),
            beta: Scalar::random(&mut rng),
            gamma: Scalar::random(&mut rng),
            delta: Scalar::random(&mut rng),
            x: Scalar::random(&mut rng),
        };
        let zero = td.alpha.is_zero()
            || td.beta.is_zero()
            || td.gamma.is_zero()
            || td.delta.is_zero()
            || td.x.is_zero();
        if !zero && !qap.t.eval(&td.x).is_zero() {
            break td;
        }
    };

    let g = G1Elem::generator();
    let h = G2Elem::generator();
    let inv_gamma = td.gamma.invert().unwrap();
    let inv_delta = td.delta.invert().unwrap();

    let mut x_scalars = Vec::with_capacity(n);
    let mut acc = Scalar::ONE;
    for _ in 0..n {
        x_scalars.push(acc);
        acc = acc * td.x;
    }
    let x_powers_g1: Vec<G1Elem> = par::map(&x_scalars, |s| g * s);
    let x_powers_g2: Vec<G2Elem> = par::map(&x_scalars, |s| h * s);

    let statement_wires: Vec<usize> = (0..=l).collect();
    let gamma_abc = par::map(&statement_wires, |&j| {
        g * (wire_poly_at(qap, j, &td.alpha, &td.beta, &td.x) * inv_gamma)
    });
    let witness_wires: Vec<usize> = (l + 1..m1).collect();
    let witness_query = par::map(&witness_wires, |&j| {
        g * (wire_poly_at(qap, j, &td.alpha, &td.beta, &td.x) * inv_delta)
    });

    let t_x_over_delta = qap.t.eval(&td.x) * inv_delta;
    let h_scalars: Vec<Scalar> =
        x_scalars[..n - 1].iter().map(|xi| *xi * t_x_over_delta).collect();
    let h_query: Vec<G1Elem> = par::map(&h_scalars, |s| g * s);

    let pk = ProvingKey {
        circuit_hash,
        alpha_g1: g * td.alpha,
        beta_g1: g * td.beta,
        beta_g2: h * td.beta,
        delta_g1: g * td.delta,
        delta_g2: h * td.delta,
        x_powers_g1,
        x_powers_g2,
        witness_query,
        h_query,
    };
    let vk = VerificationKey {
        circuit_hash,
        alpha_g1: pk.alpha_g1,
        beta_g2: pk.beta_g2,
        gamma_g2: h * td.gamma,
        delta_g2: pk.delta_g2,
        gamma_abc,
    };
    Ok((pk, vk, td))
}

// ---------------------------------------------------------------------------
// Prove
// ---------------------------------------------------------------------------

/// Proving context caching the interpolation tables shared by every proof
/// over one circuit.
pub struct PreparedProver<'a> {
    pk: &'a ProvingKey,
    cs: &'a ConstraintSystem,
    t: Poly,
    inv_dt: Vec<Scalar>,
}

impl<'a> PreparedProver<'a> {
    pub fn new(pk: &'a ProvingKey, cs: &'a ConstraintSystem) -> Result<Self> {
        if pk.circuit_hash != cs.circuit_hash() {
            return Err(Error::CircuitHashMismatch);
        }
        let n = cs.constraints.len();
        Ok(PreparedProver {
            pk,
            cs,
            t: poly::vanishing(n),
            inv_dt: poly::inverse_derivative_table(n),
        })
    }

    /// The constraint system these keys were prepared for.
    pub fn constraints(&self) -> &ConstraintSystem {
        self.cs
    }

    /// Produces a randomized proof for a full wire assignment (constant
    /// wire, statement, witness). Rejects unsatisfying assignments.
    pub fn prove(&self, assignment: &[Scalar], mut rng: impl RngCore) -> Result<Proof> {
        self.cs.ensure_satisfied(assignment)?;
        let n = self.cs.constraints.len();

        // Row evaluations ⟨A_k,a⟩, ⟨B_k,a⟩, ⟨C_k,a⟩ over the domain.
        let mut ae = vec![Scalar::ZERO; n];
        let mut be = vec![Scalar::ZERO; n];
        let mut ce = vec![Scalar::ZERO; n];
        for (k, c) in self.cs.constraints.iter().enumerate() {
            ae[k] = c.a.eval(assignment);
            be[k] = c.b.eval(assignment);
            ce[k] = c.c.eval(assignment);
        }
        let a_poly = poly::interpolate_at_roots(&ae, &self.t, &self.inv_dt);
        let b_poly = poly::interpolate_at_roots(&be, &self.t, &self.inv_dt);
        let c_poly = poly::interpolate_at_roots(&ce, &self.t, &self.inv_dt);

        // Quotient h = (A·B − C) / t, exact for satisfying assignments.
        let (h_poly, rem) = a_poly.mul(&b_poly).sub(&c_poly).div_rem(&self.t);
        debug_assert!(rem.is_zero());

        let r = Scalar::random(&mut rng);
        let s = Scalar::random(&mut rng);
        let pk = self.pk;

        let a = pk.alpha_g1
            + G1Elem::msm(&pk.x_powers_g1[..a_poly.coeffs.len()], &a_poly.coeffs)?
            + pk.delta_g1 * r;
        let b_g2 = pk.beta_g2
            + G2Elem::msm(&pk.x_powers_g2[..b_poly.coeffs.len()], &b_poly.coeffs)?
            + pk.delta_g2 * s;
        let b_g1 = pk.beta_g1
            + G1Elem::msm(&pk.x_powers_g1[..b_poly.coeffs.len()], &b_poly.coeffs)?
            + pk.delta_g1 * s;

        let witness = &assignment[self.cs.num_statement + 1..];
        let c = G1Elem::msm(&pk.witness_query, witness)?
            + G1Elem::msm(&pk.h_query[..h_poly.coeffs.len()], &h_poly.coeffs)?
            + a * s
            + b_g1 * r
            - pk.delta_g1 * (r * s);

        Ok(Proof { a, b: b_g2, c })
    }
}

/// One-shot proving without reusing the prepared tables.
pub fn prove(
    pk: &ProvingKey,
    cs: &ConstraintSystem,
    assignment: &[Scalar],
    rng: impl RngCore,
) -> Result<Proof> {
    PreparedProver::new(pk, cs)?.prove(assignment, rng)
}

// ---------------------------------------------------------------------------
// Verify
// ---------------------------------------------------------------------------

/// Verification context with the pairing-heavy parts precomputed once:
/// e(G^α,H^β), prepared H^γ and H^δ. Piece verification swaps gamma_abc_0
/// per piece via [`PreparedVk::with_gamma0`] without redoing any of that.
#[derive(Clone)]
pub struct PreparedVk {
    pub alpha_beta: GtElem,
    gamma_prep: PreparedG2,
    delta_prep: PreparedG2,
    pub gamma_abc: Vec<G1Elem>,
}

impl PreparedVk {
    pub fn new(vk: &VerificationKey) -> Self {
        PreparedVk {
            alpha_beta: pairing(&vk.alpha_g1, &vk.beta_g2),
            gamma_prep: PreparedG2::new(&vk.gamma_g2),
            delta_prep: PreparedG2::new(&vk.delta_g2),
            gamma_abc: vk.gamma_abc.clone(),
        }
    }

    /// The same key with gamma_abc_0 replaced — the downstream noised-key
    /// derivation. Pairing precomputations are reused as-is.
    pub fn with_gamma0(&self, gamma0: G1Elem) -> Self {
        let mut out = self.clone();
        out.gamma_abc[0] = gamma0;
        out
    }

    /// The pairing check with statement φ = (a_1..a_l); a_0 = 1 implicit.
    pub fn verify(&self, statement: &[Scalar], proof: &Proof) -> Result<bool> {
        if statement.len() + 1 != self.gamma_abc.len() {
            return Err(Error::LengthMismatch {
                expected: self.gamma_abc.len() - 1,
                got: statement.len(),
            });
        }
        let mut exps = Vec::with_capacity(statement.len() + 1);
        exps.push(Scalar::ONE);
        exps.extend_from_slice(statement);
        let d = G1Elem::msm(&self.gamma_abc, &exps)?;
        // e(A,B) · e(D,γ̂)^{−1} · e(C,δ̂)^{−1} == e(α,β), fused into one
        // Miller loop by negating the G1 inputs of the inverted factors.
        let neg_d = -d;
        let neg_c = -proof.c;
        let lhs = multi_pairing(&[
            (&proof.a, &PreparedG2::new(&proof.b)),
            (&neg_d, &self.gamma_prep),
            (&neg_c, &self.delta_prep),
        ]);
        Ok(lhs == self.alpha_beta)
    }
}

/// One-shot verification.
pub fn verify(vk: &VerificationKey, statement: &[Scalar], proof: &Proof) -> Result<bool> {
    PreparedVk::new(vk).verify(statement, proof)
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

/// Forges a verifying proof for an arbitrary statement using the trapdoor —
/// no witness involved. The zero-knowledge argument in tests rests on this:
/// anything provable honestly is also producible from (trapdoor, φ) alone.
pub fn sim(td: &Trapdoor, qap: &Qap, statement: &[Scalar], mut rng: impl RngCore) -> Result<Proof> {
    if statement.len() != qap.num_statement {
        return Err(Error::LengthMismatch {
            expected: qap.num_statement,
            got: statement.len(),
        });
    }
    let a = Scalar::random(&mut rng);
    let b = Scalar::random(&mut rng);
    // Σ_{j=0..l} a_j·(β·u_j(x)+α·v_j(x)+w_j(x)), the γ-side exponent.
    let mut acc = wire_poly_at(qap, 0, &td.alpha, &td.beta, &td.x);
    for (j, aj) in statement.iter().enumerate() {
        acc += *aj * wire_poly_at(qap, j + 1, &td.alpha, &td.beta, &td.x);
    }
    let c = (a * b - td.alpha * td.beta - acc) * td.delta.invert().unwrap();
    Ok(Proof {
        a: G1Elem::generator() * a,
        b: G2Elem::generator() * b,
        c: G1Elem::generator() * c,
    })
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

fn put_g1_vec(w: &mut ByteWriter, v: &[G1Elem]) {
    w.put_u32(v.len() as u32);
    for p in v {
        w.put_fixed(&p.to_compressed());
    }
}

fn get_g1_vec(r: &mut ByteReader) -> Result<Vec<G1Elem>> {
    let n = r.get_u32()? as usize;
    (0..n).map(|_| G1Elem::from_compressed(&r.get_fixed::<48>()?)).collect()
}

impl ProvingKey {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.put_fixed(&self.circuit_hash);
        w.put_fixed(&self.alpha_g1.to_compressed());
        w.put_fixed(&self.beta_g1.to_compressed());
        w.put_fixed(&self.beta_g2.to_compressed());
        w.put_fixed(&self.delta_g1.to_compressed());
        w.put_fixed(&self.delta_g2.to_compressed());
        put_g1_vec(&mut w, &self.x_powers_g1);
        w.put_u32(self.x_powers_g2.len() as u32);
        for p in &self.x_powers_g2 {
            w.put_fixed(&p.to_compressed());
        }
        put_g1_vec(&mut w, &self.witness_query);
        put_g1_vec(&mut w, &self.h_query);
        w.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        let circuit_hash = r.get_fixed::<32>()?;
        let alpha_g1 = G1Elem::from_compressed(&r.get_fixed::<48>()?)?;
        let beta_g1 = G1Elem::from_compressed(&r.get_fixed::<48>()?)?;
        let beta_g2 = G2Elem::from_compressed(&r.get_fixed::<96>()?)?;
        let delta_g1 = G1Elem::from_compressed(&r.get_fixed::<48>()?)?;
        let delta_g2 = G2Elem::from_compressed(&r.get_fixed::<96>()?)?;
        let x_powers_g1 = get_g1_vec(&mut r)?;
        let n2 = r.get_u32()? as usize;
        let x_powers_g2 = (0..n2)
            .map(|_| G2Elem::from_compressed(&r.get_fixed::<96>()?))
            .collect::<Result<Vec<_>>>()?;
        let witness_query = get_g1_vec(&mut r)?;
        let h_query = get_g1_vec(&mut r)?;
        r.finish()?;
        Ok(ProvingKey {
            circuit_hash,
            alpha_g1,
            beta_g1,
            beta_g2,
            delta_g1,
            delta_g2,
            x_powers_g1,
            x_powers_g2,
            witness_query,
            h_query,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        encode::write_framed(path, kind::PROVING_KEY, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&encode::read_framed(path, kind::PROVING_KEY)?)
    }
}

impl VerificationKey {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.put_fixed(&self.circuit_hash);
        w.put_fixed(&self.alpha_g1.to_compressed());
        w.put_fixed(&self.beta_g2.to_compressed());
        w.put_fixed(&self.gamma_g2.to_compressed());
        w.put_fixed(&self.delta_g2.to_compressed());
        put_g1_vec(&mut w, &self.gamma_abc);
        w.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        let vk = Self::read(&mut r)?;
        r.finish()?;
        Ok(vk)
    }

    /// Reads one key from the middle of a larger frame (bundles embed
    /// their per-piece keys).
    pub fn read(r: &mut ByteReader) -> Result<Self> {
        Ok(VerificationKey {
            circuit_hash: r.get_fixed::<32>()?,
            alpha_g1: G1Elem::from_compressed(&r.get_fixed::<48>()?)?,
            beta_g2: G2Elem::from_compressed(&r.get_fixed::<96>()?)?,
            gamma_g2: G2Elem::from_compressed(&r.get_fixed::<96>()?)?,
            delta_g2: G2Elem::from_compressed(&r.get_fixed::<96>()?)?,
            gamma_abc: get_g1_vec(r)?,
        })
    }

    pub fn write(&self, w: &mut ByteWriter) {
        w.put_var(&self.to_bytes());
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        encode::write_framed(path, kind::VERIFYING_KEY, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&encode::read_framed(path, kind::VERIFYING_KEY)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantize::{execute, Expr, ProgramBuilder};
    use crate::r1cs::{synthesize_piece, SynthesisMap};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    /// x·x = y with a dummy public input: statement = [dummy, y].
    fn toy_setup(
        seed: u64,
    ) -> (ConstraintSystem, SynthesisMap, Qap, ProvingKey, VerificationKey, Trapdoor) {
        let mut b = ProgramBuilder::new(7);
        let _dummy = b.public_input();
        let x = b.private_input();
        let y = b.push(Expr::Mul { a: x, b: x });
        let program = b.finish(vec![y]).unwrap();
        let (cs, map) = synthesize_piece(&program).unwrap();
        let qap = cs.to_qap();
        let (pk, vk, td) = setup(&qap, cs.circuit_hash(), rng(seed)).unwrap();
        (cs, map, qap, pk, vk, td)
    }

    fn toy_assignment(dummy: i128, x: i128) -> Vec<Scalar> {
        vec![
            Scalar::ONE,
            Scalar::from_i128(dummy),
            Scalar::from_i128(x * x),
            Scalar::from_i128(x),
        ]
    }

    #[test]
    fn honest_round_trip() {
        let (cs, _, _, pk, vk, _) = toy_setup(1);
        assert_eq!(vk.gamma_abc.len(), 3);
        let asg = toy_assignment(7, 3);
        let proof = prove(&pk, &cs, &asg, rng(2)).unwrap();
        assert!(verify(&vk, cs.statement(&asg), &proof).unwrap());
    }

    #[test]
    fn proofs_are_randomized_but_both_verify() {
        let (cs, _, _, pk, vk, _) = toy_setup(3);
        let asg = toy_assignment(7, 3);
        let p1 = prove(&pk, &cs, &asg, rng(10)).unwrap();
        let p2 = prove(&pk, &cs, &asg, rng(11)).unwrap();
        assert_ne!(p1.a, p2.a);
        assert_ne!(p1.c, p2.c);
        let pvk = PreparedVk::new(&vk);
        assert!(pvk.verify(cs.statement(&asg), &p1).unwrap());
        assert!(pvk.verify(cs.statement(&asg), &p2).unwrap());
    }

    #[test]
    fn unsatisfying_assignment_rejected_early() {
        let (cs, _, _, pk, _, _) = toy_setup(4);
        let mut asg = toy_assignment(7, 3);
        asg[2] = Scalar::from_i128(8);
        assert!(matches!(
            prove(&pk, &cs, &asg, rng(0)),
            Err(Error::Unsatisfied { .. })
        ));
    }

    #[test]
    fn tampered_statement_fails() {
        let (cs, _, _, pk, vk, _) = toy_setup(5);
        let asg = toy_assignment(7, 3);
        let proof = prove(&pk, &cs, &asg, rng(6)).unwrap();
        let mut stmt = cs.statement(&asg).to_vec();
        stmt[1] = Scalar::from_i128(10);
        assert!(!verify(&vk, &stmt, &proof).unwrap());
    }

    #[test]
    fn identity_a_fails() {
        let (cs, _, _, pk, vk, _) = toy_setup(6);
        let asg = toy_assignment(7, 3);
        let mut proof = prove(&pk, &cs, &asg, rng(7)).unwrap();
        proof.a = G1Elem::identity();
        assert!(!verify(&vk, cs.statement(&asg), &proof).unwrap());
    }

    #[test]
    fn completeness_and_soundness_smoke() {
        let (cs, _, _, pk, vk, _) = toy_setup(8);
        let prover = PreparedProver::new(&pk, &cs).unwrap();
        let pvk = PreparedVk::new(&vk);
        let mut r = rng(9);
        for i in 0..100 {
            let x = (i as i128 * 31 + 5) % 1000 - 500;
            let dummy = (i as i128 * 17) % 97;
            let asg = toy_assignment(dummy, x);
            let proof = prover.prove(&asg, &mut r).unwrap();
            let stmt = cs.statement(&asg);
            assert!(pvk.verify(stmt, &proof).unwrap(), "completeness #{i}");

            // Single-element statement tamper must fail. The toy's dummy
            // slot is deliberately unconstrained, so tamper the bound one.
            let mut bad = stmt.to_vec();
            bad[1] += Scalar::from_u64(i + 1);
            assert!(!pvk.verify(&bad, &proof).unwrap(), "soundness #{i}");
        }
    }

    #[test]
    fn simulation_verifies_without_witness() {
        let (cs, _, qap, pk, vk, td) = toy_setup(12);
        // Honest-looking statement.
        let stmt = vec![Scalar::from_i128(7), Scalar::from_i128(9)];
        let proof = sim(&td, &qap, &stmt, rng(13)).unwrap();
        assert!(verify(&vk, &stmt, &proof).unwrap());

        // Unsatisfiable statement (7 is no square mod the trace values used
        // honestly) — simulation still verifies; that is the point.
        let stmt = vec![Scalar::from_i128(0), Scalar::from_i128(7)];
        let proof = sim(&td, &qap, &stmt, rng(14)).unwrap();
        assert!(verify(&vk, &stmt, &proof).unwrap());

        // A trapdoor from a different setup fails overwhelmingly.
        let (_, _, _, _, _, other_td) = toy_setup(15);
        let forged = sim(&other_td, &qap, &stmt, rng(16)).unwrap();
        assert!(!verify(&vk, &stmt, &forged).unwrap());
        let _ = pk;
        let _ = cs;
    }

    #[test]
    fn seeded_setup_is_deterministic() {
        let (_, _, qap, pk1, vk1, _) = toy_setup(42);
        let (cs, _, _, _, _, _) = toy_setup(42);
        let (pk2, vk2, _) = setup(&qap, cs.circuit_hash(), rng(42)).unwrap();
        assert_eq!(pk1.to_bytes(), pk2.to_bytes());
        assert_eq!(vk1.to_bytes(), vk2.to_bytes());
    }

    #[test]
    fn key_files_round_trip_and_bind_circuit() {
        let (cs, _, _, pk, vk, _) = toy_setup(20);
        let dir = tempfile::tempdir().unwrap();
        let pk_path = dir.path().join("pk.bin");
        let vk_path = dir.path().join("vk.bin");
        pk.save(&pk_path).unwrap();
        vk.save(&vk_path).unwrap();
        assert_eq!(ProvingKey::load(&pk_path).unwrap(), pk);
        assert_eq!(VerificationKey::load(&vk_path).unwrap(), vk);

        // A key for a different circuit is rejected at prover construction.
        let mut b = ProgramBuilder::new(7);
        let xin = b.public_input();
        let out = b.add(xin, xin);
        let p2 = b.finish(vec![out]).unwrap();
        let (cs2, _) = synthesize_piece(&p2).unwrap();
        assert!(matches!(
            PreparedProver::new(&pk, &cs2),
            Err(Error::CircuitHashMismatch)
        ));
        let _ = cs;
    }

    #[test]
    fn gadget_circuit_round_trip() {
        // End-to-end over a circuit with both division gadgets.
        let mut b = ProgramBuilder::new(7);
        let xin = b.public_input();
        let d = b.private_input();
        let prod = b.mul_rescaled(xin, d);
        let rec = b.push(Expr::RecipDiv { a: d, num: 100_000_000_000_000, k_bits: 26 });
        let out = b.add(prod, rec);
        let program = b.finish(vec![out]).unwrap();
        let (cs, map) = synthesize_piece(&program).unwrap();
        let qap = cs.to_qap();
        let (pk, vk, _) = setup(&qap, cs.circuit_hash(), rng(30)).unwrap();

        let trace = execute(&program, &[-5_000_000], &[3_000_000]).unwrap();
        let asg = map.assign(&trace).unwrap();
        let proof = prove(&pk, &cs, &asg, rng(31)).unwrap();
        assert!(verify(&vk, cs.statement(&asg), &proof).unwrap());

        let mut bad = cs.statement(&asg).to_vec();
        bad[1] += Scalar::ONE;
        assert!(!verify(&vk, &bad, &proof).unwrap());
    }
}
