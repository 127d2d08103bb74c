//! Rank-1 constraint systems and their QAP form.
//!
//! Wire layout: a_0 is the constant-one wire, a_1..a_l the public statement
//! (input half then output half, equal sizes), a_{l+1}..a_m the witness.
//! Every piece of a training run shares one ConstraintSystem — pieces are
//! identical circuits, piece identity lives in the assignment — so key
//! setup runs once per task.

use std::collections::HashMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::algebra::Scalar;
use crate::encode::{self, kind, ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::par;
use crate::poly::{self, Poly};
use crate::quantize::{Expr, FixedTrace, PieceProgram};

/// Sparse linear combination over wires; terms sorted by wire index with no
/// duplicates or zero coefficients, so equal combinations have equal bytes.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LinComb {
    pub terms: Vec<(usize, Scalar)>,
}

impl LinComb {
    pub fn new(terms: Vec<(usize, Scalar)>) -> Self {
        let mut merged: Vec<(usize, Scalar)> = Vec::with_capacity(terms.len());
        let mut sorted = terms;
        sorted.sort_by_key(|(w, _)| *w);
        for (w, c) in sorted {
            match merged.last_mut() {
                Some((lw, lc)) if *lw == w => *lc += c,
                _ => merged.push((w, c)),
            }
        }
        merged.retain(|(_, c)| !c.is_zero());
        LinComb { terms: merged }
    }

    pub fn of(terms: &[(usize, i128)]) -> Self {
        Self::new(terms.iter().map(|(w, c)| (*w, Scalar::from_i128(*c))).collect())
    }

    pub fn empty() -> Self {
        LinComb { terms: Vec::new() }
    }

    pub fn eval(&self, assignment: &[Scalar]) -> Scalar {
        self.terms.iter().map(|(w, c)| assignment[*w] * c).sum()
    }
}

/// One constraint ⟨A,a⟩ · ⟨B,a⟩ = ⟨C,a⟩.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub a: LinComb,
    pub b: LinComb,
    pub c: LinComb,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintSystem {
    /// Statement length l (wires 1..=l).
    pub num_statement: usize,
    /// Total wire count m+1 including the constant-one wire.
    pub num_wires: usize,
    pub constraints: Vec<Constraint>,
}

impl ConstraintSystem {
    /// True iff every constraint holds under `assignment` (which must carry
    /// a 1 in the constant wire).
    pub fn check_satisfied(&self, assignment: &[Scalar]) -> Result<bool> {
        if assignment.len() != self.num_wires {
            return Err(Error::LengthMismatch { expected: self.num_wires, got: assignment.len() });
        }
        if assignment[0] != Scalar::ONE {
            return Ok(false);
        }
        Ok(self.first_violation(assignment).is_none())
    }

    /// Like [`Self::check_satisfied`] but reports the index of the first
    /// violated constraint.
    pub fn ensure_satisfied(&self, assignment: &[Scalar]) -> Result<()> {
        if assignment.len() != self.num_wires {
            return Err(Error::LengthMismatch { expected: self.num_wires, got: assignment.len() });
        }
        if assignment[0] != Scalar::ONE {
            return Err(Error::Unsatisfied { index: 0 });
        }
        match self.first_violation(assignment) {
            None => Ok(()),
            Some(index) => Err(Error::Unsatisfied { index }),
        }
    }

    fn first_violation(&self, assignment: &[Scalar]) -> Option<usize> {
        self.constraints.iter().position(|c| {
            c.a.eval(assignment) * c.b.eval(assignment) != c.c.eval(assignment)
        })
    }

    /// The public statement φ = a_1..a_l.
    pub fn statement<'a>(&self, assignment: &'a [Scalar]) -> &'a [Scalar] {
        &assignment[1..=self.num_statement]
    }

    /// Deterministic self-describing serialization; its hash binds proving
    /// and verification keys to this exact circuit.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::new();
        w.put_u32(self.num_wires as u32);
        w.put_u32(self.num_statement as u32);
        w.put_u32(self.constraints.len() as u32);
        for c in &self.constraints {
            for lc in [&c.a, &c.b, &c.c] {
                w.put_u32(lc.terms.len() as u32);
                for (wire, coeff) in &lc.terms {
                    w.put_u32(*wire as u32);
                    w.put_fixed(&coeff.to_be_bytes());
                }
            }
        }
        w.into_bytes()
    }

    pub fn circuit_hash(&self) -> [u8; 32] {
        Sha256::digest(self.canonical_bytes()).into()
    }

    pub fn from_canonical_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        let num_wires = r.get_u32()? as usize;
        let num_statement = r.get_u32()? as usize;
        let n = r.get_u32()? as usize;
        let mut constraints = Vec::with_capacity(n);
        for _ in 0..n {
            let mut lcs = Vec::with_capacity(3);
            for _ in 0..3 {
                let len = r.get_u32()? as usize;
                let mut terms = Vec::with_capacity(len);
                for _ in 0..len {
                    let wire = r.get_u32()? as usize;
                    if wire >= num_wires {
                        return Err(Error::BadFrame("constraint wire out of range"));
                    }
                    let coeff = Scalar::from_be_bytes(&r.get_fixed::<32>()?)?;
                    terms.push((wire, coeff));
                }
                lcs.push(LinComb::new(terms));
            }
            let c = lcs.pop().unwrap();
            let b = lcs.pop().unwrap();
            let a = lcs.pop().unwrap();
            constraints.push(Constraint { a, b, c });
        }
        r.finish()?;
        if num_statement + 1 >= num_wires {
            return Err(Error::BadFrame("statement length inconsistent with wire count"));
        }
        Ok(ConstraintSystem { num_statement, num_wires, constraints })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        encode::write_framed(path, kind::CIRCUIT, &self.canonical_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = encode::read_framed(path, kind::CIRCUIT)?;
        Self::from_canonical_bytes(&bytes)
    }

    /// Quadratic-arithmetic-program form: per-wire polynomials interpolated
    /// over the constraint domain {1..n}, plus the domain's vanishing
    /// polynomial. For a satisfying assignment,
    /// (Σ a_i u_i)(Σ a_i v_i) − Σ a_i w_i is divisible by t; otherwise not.
    pub fn to_qap(&self) -> Qap {
        let n = self.constraints.len();
        if n == 0 {
            // Divisibility by the empty product is vacuous.
            let zeros = vec![Poly::zero(); self.num_wires];
            return Qap {
                u: zeros.clone(),
                v: zeros.clone(),
                w: zeros,
                t: Poly::from_coeffs(vec![Scalar::ONE]),
                num_statement: self.num_statement,
                num_constraints: 0,
            };
        }
        let t = poly::vanishing(n);
        let inv_dt = poly::inverse_derivative_table(n);
        // Sparse columns: wire → [(constraint index, coefficient)].
        let mut cols: [Vec<Vec<(usize, Scalar)>>; 3] =
            core::array::from_fn(|_| vec![Vec::new(); self.num_wires]);
        for (k, c) in self.constraints.iter().enumerate() {
            for (m, lc) in [&c.a, &c.b, &c.c].into_iter().enumerate() {
                for (wire, coeff) in &lc.terms {
                    cols[m][*wire].push((k, *coeff));
                }
            }
        }
        let wires: Vec<usize> = (0..self.num_wires).collect();
        let interpolate_matrix = |col: &Vec<Vec<(usize, Scalar)>>| -> Vec<Poly> {
            par::map(&wires, |&i| {
                if col[i].is_empty() {
                    return Poly::zero();
                }
                let mut evals = vec![Scalar::ZERO; n];
                for (k, coeff) in &col[i] {
                    evals[*k] += *coeff;
                }
                poly::interpolate_at_roots(&evals, &t, &inv_dt)
            })
        };
        Qap {
            u: interpolate_matrix(&cols[0]),
            v: interpolate_matrix(&cols[1]),
            w: interpolate_matrix(&cols[2]),
            t,
            num_statement: self.num_statement,
            num_constraints: n,
        }
    }
}

/// QAP instance: u_i, v_i, w_i indexed by wire, and the vanishing
/// polynomial t of the constraint domain.
#[derive(Clone, Debug)]
pub struct Qap {
    pub u: Vec<Poly>,
    pub v: Vec<Poly>,
    pub w: Vec<Poly>,
    pub t: Poly,
    pub num_statement: usize,
    pub num_constraints: usize,
}

impl Qap {
    pub fn num_wires(&self) -> usize {
        self.u.len()
    }
}

// ---------------------------------------------------------------------------
// Synthesis from fixed-point programs
// ---------------------------------------------------------------------------

/// Where a gadget expression's auxiliary wires live, with the constants
/// needed to recompute them from a trace.
#[derive(Clone, Debug)]
enum Gadget {
    None,
    Rescale {
        a_sym: usize,
        r_sym: usize,
        den: i128,
        rem: usize,
        sign: usize,
        mag: usize,
        m_bits: (usize, usize),
        c_bits: (usize, usize),
    },
    Recip {
        a_sym: usize,
        r_sym: usize,
        num: i128,
        rem: usize,
        r_bits: (usize, usize),
        d_bits: (usize, usize),
    },
}

/// Maps trace symbols to wires and knows how to complete a full assignment
/// (including gadget-internal remainder/sign/bit wires) from a trace.
#[derive(Clone, Debug)]
pub struct SynthesisMap {
    pub num_public: usize,
    pub num_wires: usize,
    sym_wire: Vec<usize>,
    gadgets: Vec<Gadget>,
    outputs: Vec<usize>,
}

impl SynthesisMap {
    /// Wire carrying a symbol's value.
    pub fn wire_of(&self, sym: usize) -> usize {
        self.sym_wire[sym]
    }

    /// Statement values (input half then output half) of a trace, as raw
    /// integers.
    pub fn statement_values(&self, trace: &FixedTrace) -> Vec<i128> {
        let mut out: Vec<i128> = trace.syms[..self.num_public].to_vec();
        out.extend(self.outputs.iter().map(|s| trace.syms[*s]));
        out
    }

    /// Completes the full wire assignment for a trace, deriving every
    /// gadget-internal witness (remainders, signs, bit decompositions).
    pub fn assign(&self, trace: &FixedTrace) -> Result<Vec<Scalar>> {
        if trace.syms.len() != self.sym_wire.len() {
            return Err(Error::LengthMismatch {
                expected: self.sym_wire.len(),
                got: trace.syms.len(),
            });
        }
        let mut asg = vec![Scalar::ZERO; self.num_wires];
        asg[0] = Scalar::ONE;
        for (sym, wire) in self.sym_wire.iter().enumerate() {
            asg[*wire] = Scalar::from_i128(trace.syms[sym]);
        }
        // Output statement wires duplicate their producer when the producer
        // could not claim the slot directly (inputs echoed as outputs).
        for (j, sym) in self.outputs.iter().enumerate() {
            asg[1 + self.num_public + j] = Scalar::from_i128(trace.syms[*sym]);
        }
        for g in &self.gadgets {
            match *g {
                Gadget::None => {}
                Gadget::Rescale { a_sym, r_sym, den, rem, sign, mag, m_bits, c_bits } => {
                    let a = trace.syms[a_sym];
                    let out = trace.syms[r_sym];
                    let r = a - den * out;
                    let m = r.unsigned_abs() as i128;
                    asg[rem] = Scalar::from_i128(r);
                    asg[sign] = if r >= 0 { Scalar::ONE } else { Scalar::ZERO };
                    asg[mag] = Scalar::from_i128(m);
                    fill_bits(&mut asg, m_bits, m)?;
                    fill_bits(&mut asg, c_bits, den - 1 - m)?;
                }
                Gadget::Recip { a_sym, r_sym, num, rem, r_bits, d_bits } => {
                    let den = trace.syms[a_sym];
                    let out = trace.syms[r_sym];
                    let r = num - den * out;
                    asg[rem] = Scalar::from_i128(r);
                    fill_bits(&mut asg, r_bits, r)?;
                    fill_bits(&mut asg, d_bits, den - 1 - r)?;
                }
            }
        }
        Ok(asg)
    }
}

fn fill_bits(asg: &mut [Scalar], (start, len): (usize, usize), value: i128) -> Result<()> {
    if value < 0 || (len < 127 && value >= (1i128 << len)) {
        return Err(Error::Overflow { context: "gadget value outside its bit range" });
    }
    for i in 0..len {
        asg[start + i] = Scalar::from_u64(((value >> i) & 1) as u64);
    }
    Ok(())
}

fn bit_len(v: i128) -> usize {
    debug_assert!(v >= 0);
    (128 - v.leading_zeros()) as usize
}

struct Synthesizer {
    constraints: Vec<Constraint>,
    next_wire: usize,
}

impl Synthesizer {
    fn alloc(&mut self) -> usize {
        self.next_wire += 1;
        self.next_wire - 1
    }

    fn push(&mut self, a: LinComb, b: LinComb, c: LinComb) {
        self.constraints.push(Constraint { a, b, c });
    }

    fn push_boolean(&mut self, wire: usize) {
        // wire · (wire − 1) = 0
        self.push(
            LinComb::of(&[(wire, 1)]),
            LinComb::of(&[(wire, 1), (0, -1)]),
            LinComb::empty(),
        );
    }

    /// Allocates `len` wires constrained to bits whose weighted sum equals
    /// the linear combination `total`.
    fn push_bit_sum(&mut self, len: usize, total: LinComb) -> (usize, usize) {
        let start = self.next_wire;
        let mut sum = Vec::with_capacity(len);
        for i in 0..len {
            let w = self.alloc();
            self.push_boolean(w);
            sum.push((w, 1i128 << i));
        }
        self.push(LinComb::of(&sum), LinComb::of(&[(0, 1)]), total);
        (start, len)
    }
}

/// Synthesizes the shared piece circuit from a fixed-point program: one
/// constraint per arithmetic expression plus the remainder range-check
/// gadgets for the two division forms.
pub fn synthesize_piece(program: &PieceProgram) -> Result<(ConstraintSystem, SynthesisMap)> {
    program.validate()?;
    let p = program.num_public;
    if p == 0 {
        return Err(Error::BadStatementLayout(0));
    }
    let l = 2 * p;
    let num_inputs = program.num_inputs();

    // Expression results claim their statement output wire directly when
    // they can; remaining output slots are bound by copy constraints below.
    let mut slot_of_sym: HashMap<usize, usize> = HashMap::new();
    for (j, o) in program.outputs.iter().enumerate() {
        if o.0 >= num_inputs {
            slot_of_sym.entry(o.0).or_insert(j);
        }
    }

    let mut sym_wire = vec![0usize; program.num_syms()];
    for (i, w) in sym_wire.iter_mut().enumerate().take(p) {
        *w = 1 + i;
    }
    for i in 0..program.num_private {
        sym_wire[p + i] = 1 + l + i;
    }

    let mut syn = Synthesizer { constraints: Vec::new(), next_wire: 1 + l + program.num_private };
    let mut gadgets = Vec::with_capacity(program.exprs.len());

    for (k, e) in program.exprs.iter().enumerate() {
        let r_sym = num_inputs + k;
        let out = match slot_of_sym.get(&r_sym) {
            Some(&j) => 1 + p + j,
            None => syn.alloc(),
        };
        sym_wire[r_sym] = out;
        let one = LinComb::of(&[(0, 1)]);
        let gadget = match *e {
            Expr::Add { a, b } => {
                syn.push(
                    LinComb::of(&[(sym_wire[a.0], 1), (sym_wire[b.0], 1)]),
                    one,
                    LinComb::of(&[(out, 1)]),
                );
                Gadget::None
            }
            Expr::Sub { a, b } => {
                syn.push(
                    LinComb::of(&[(sym_wire[a.0], 1), (sym_wire[b.0], -1)]),
                    one,
                    LinComb::of(&[(out, 1)]),
                );
                Gadget::None
            }
            Expr::Mul { a, b } => {
                syn.push(
                    LinComb::of(&[(sym_wire[a.0], 1)]),
                    LinComb::of(&[(sym_wire[b.0], 1)]),
                    LinComb::of(&[(out, 1)]),
                );
                Gadget::None
            }
            Expr::MulConst { a, c } => {
                syn.push(
                    LinComb::of(&[(sym_wire[a.0], c)]),
                    one,
                    LinComb::of(&[(out, 1)]),
                );
                Gadget::None
            }
            Expr::AddConst { a, c } => {
                syn.push(
                    LinComb::of(&[(sym_wire[a.0], 1), (0, c)]),
                    one,
                    LinComb::of(&[(out, 1)]),
                );
                Gadget::None
            }
            Expr::RescaleConst { a, den } => {
                let wa = sym_wire[a.0];
                let kbits = bit_len(den - 1);
                let rem = syn.alloc();
                let sign = syn.alloc();
                let mag = syn.alloc();
                // den·out = a − rem, the division relation itself.
                syn.push(
                    LinComb::of(&[(out, den)]),
                    one,
                    LinComb::of(&[(wa, 1), (rem, -1)]),
                );
                // rem = (2·sign − 1)·mag splits the remainder into a sign
                // bit and a magnitude the range check can bound.
                syn.push_boolean(sign);
                syn.push(
                    LinComb::of(&[(sign, 2), (0, -1)]),
                    LinComb::of(&[(mag, 1)]),
                    LinComb::of(&[(rem, 1)]),
                );
                // mag ≤ den − 1, enforced from both sides.
                let m_bits = syn.push_bit_sum(kbits, LinComb::of(&[(mag, 1)]));
                let c_bits =
                    syn.push_bit_sum(kbits, LinComb::of(&[(0, den - 1), (mag, -1)]));
                Gadget::Rescale { a_sym: a.0, r_sym, den, rem, sign, mag, m_bits, c_bits }
            }
            Expr::RecipDiv { a, num, k_bits } => {
                let wa = sym_wire[a.0];
                let kbits = k_bits as usize;
                let rem = syn.alloc();
                // a·out = num − rem with 0 ≤ rem < a.
                syn.push(
                    LinComb::of(&[(wa, 1)]),
                    LinComb::of(&[(out, 1)]),
                    LinComb::of(&[(0, num), (rem, -1)]),
                );
                let r_bits = syn.push_bit_sum(kbits, LinComb::of(&[(rem, 1)]));
                let d_bits =
                    syn.push_bit_sum(kbits, LinComb::of(&[(wa, 1), (0, -1), (rem, -1)]));
                Gadget::Recip { a_sym: a.0, r_sym, num, rem, r_bits, d_bits }
            }
        };
        gadgets.push(gadget);
    }

    // Bind any output slot not directly claimed by its producer.
    for (j, o) in program.outputs.iter().enumerate() {
        let stmt = 1 + p + j;
        if sym_wire[o.0] != stmt {
            syn.push(
                LinComb::of(&[(stmt, 1)]),
                LinComb::of(&[(0, 1)]),
                LinComb::of(&[(sym_wire[o.0], 1)]),
            );
        }
    }

    let cs = ConstraintSystem {
        num_statement: l,
        num_wires: syn.next_wire,
        constraints: syn.constraints,
    };
    let map = SynthesisMap {
        num_public: p,
        num_wires: cs.num_wires,
        sym_wire,
        gadgets,
        outputs: program.outputs.iter().map(|o| o.0).collect(),
    };
    Ok((cs, map))
}
