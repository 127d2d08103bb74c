//! Fraction→integer mapping and polynomial replacement of non-linear ops.
//!
//! Training arithmetic runs over signed integers at a decimal scale 10^rat
//! ("fixed-point"). Multiplication doubles the scale, so every product is
//! followed by an explicit rescale expression with a remainder witness —
//! that witness is range-checked in-circuit, which is what makes the
//! integer trace provable rather than merely plausible. The sigmoid is
//! replaced by a truncated expansion of e^{−x} plus one constrained
//! reciprocal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the decimal scale exponent. 10^18 is the largest power of
/// ten below 2^63, the integer-range invariant on trace values.
pub const MAX_RAT: u32 = 18;

/// Ceiling on Taylor order selection; factorials stay within i64 up to 20!.
pub const MAX_TAYLOR_ORDER: u32 = 20;

pub fn pow10(rat: u32) -> i128 {
    10i128.pow(rat)
}

// ---------------------------------------------------------------------------
// Expression IR
// ---------------------------------------------------------------------------

/// Index of a value in a piece's evaluation trace. Inputs come first
/// (public, then private); each expression appends one result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymId(pub usize);

/// One fixed-point expression. All semantics are exact signed-integer
/// arithmetic; the two division forms truncate toward zero and carry an
/// implicit remainder that the constraint synthesis materializes and
/// range-checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Expr {
    /// out = a + b
    Add { a: SymId, b: SymId },
    /// out = a − b
    Sub { a: SymId, b: SymId },
    /// out = a · b (raw product; scale doubles, rescale separately)
    Mul { a: SymId, b: SymId },
    /// out = a · c for a constant c
    MulConst { a: SymId, c: i128 },
    /// out = a + c for a constant c
    AddConst { a: SymId, c: i128 },
    /// out = trunc(a / den) for a constant den > 0
    RescaleConst { a: SymId, den: i128 },
    /// out = trunc(num / a) for a constant num > 0 and runtime a > 0;
    /// k_bits bounds the remainder's binary decomposition and must cover
    /// den − 1 for every denominator the circuit can honestly produce
    RecipDiv { a: SymId, num: i128, k_bits: u32 },
}

impl Expr {
    /// Operand symbols, for validation and wiring.
    pub fn operands(&self) -> (SymId, Option<SymId>) {
        match *self {
            Expr::Add { a, b } | Expr::Sub { a, b } | Expr::Mul { a, b } => (a, Some(b)),
            Expr::MulConst { a, .. }
            | Expr::AddConst { a, .. }
            | Expr::RescaleConst { a, .. }
            | Expr::RecipDiv { a, .. } => (a, None),
        }
    }
}

/// A straight-line fixed-point program for one circuit piece: public inputs
/// (the statement's input half), private inputs (local data), expressions,
/// and the designated output symbols (the statement's output half).
///
/// The statement layout is two equal halves, so `outputs.len()` must equal
/// `num_public`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PieceProgram {
    pub rat: u32,
    pub num_public: usize,
    pub num_private: usize,
    pub exprs: Vec<Expr>,
    pub outputs: Vec<SymId>,
}

impl PieceProgram {
    pub fn num_inputs(&self) -> usize {
        self.num_public + self.num_private
    }

    pub fn num_syms(&self) -> usize {
        self.num_inputs() + self.exprs.len()
    }

    /// Statement length l: input half plus output half.
    pub fn statement_len(&self) -> usize {
        self.num_public + self.outputs.len()
    }

    /// Structural validation: operands defined before use, positive
    /// divisors, equal statement halves.
    pub fn validate(&self) -> Result<()> {
        if self.exprs.is_empty() {
            return Err(Error::EmptyProgram);
        }
        if self.outputs.len() != self.num_public {
            return Err(Error::BadStatementLayout(self.statement_len()));
        }
        if self.rat == 0 || self.rat > MAX_RAT {
            return Err(Error::OutOfDomain(format!("scale exponent {} out of range", self.rat)));
        }
        for (i, e) in self.exprs.iter().enumerate() {
            let defined = self.num_inputs() + i;
            let (a, b) = e.operands();
            if a.0 >= defined || b.map_or(false, |b| b.0 >= defined) {
                return Err(Error::UndefinedSymbol(defined));
            }
            match *e {
                Expr::RescaleConst { den, .. } if den <= 0 => {
                    return Err(Error::NonPositiveDenominator { context: "rescale constant" })
                }
                Expr::RecipDiv { num, k_bits, .. } if num <= 0 || k_bits == 0 || k_bits > 63 => {
                    return Err(Error::NonPositiveDenominator { context: "reciprocal numerator" })
                }
                _ => {}
            }
        }
        for o in &self.outputs {
            if o.0 >= self.num_syms() {
                return Err(Error::UndefinedSymbol(o.0));
            }
        }
        Ok(())
    }
}

/// Builder enforcing the input-then-expression staging of [`PieceProgram`].
pub struct ProgramBuilder {
    rat: u32,
    num_public: usize,
    num_private: usize,
    exprs: Vec<Expr>,
}

impl ProgramBuilder {
    pub fn new(rat: u32) -> Self {
        ProgramBuilder { rat, num_public: 0, num_private: 0, exprs: Vec::new() }
    }

    pub fn scale(&self) -> i128 {
        pow10(self.rat)
    }

    pub fn public_input(&mut self) -> SymId {
        assert!(
            self.num_private == 0 && self.exprs.is_empty(),
            "public inputs must be declared first"
        );
        self.num_public += 1;
        SymId(self.num_public - 1)
    }

    pub fn private_input(&mut self) -> SymId {
        assert!(self.exprs.is_empty(), "inputs must be declared before expressions");
        self.num_private += 1;
        SymId(self.num_public + self.num_private - 1)
    }

    pub fn push(&mut self, e: Expr) -> SymId {
        self.exprs.push(e);
        SymId(self.num_public + self.num_private + self.exprs.len() - 1)
    }

    pub fn add(&mut self, a: SymId, b: SymId) -> SymId {
        self.push(Expr::Add { a, b })
    }

    pub fn sub(&mut self, a: SymId, b: SymId) -> SymId {
        self.push(Expr::Sub { a, b })
    }

    pub fn add_const(&mut self, a: SymId, c: i128) -> SymId {
        self.push(Expr::AddConst { a, c })
    }

    pub fn mul_const(&mut self, a: SymId, c: i128) -> SymId {
        self.push(Expr::MulConst { a, c })
    }

    /// Fixed-point product: raw multiply followed by the mandatory rescale
    /// back to scale 10^rat.
    pub fn mul_rescaled(&mut self, a: SymId, b: SymId) -> SymId {
        let raw = self.push(Expr::Mul { a, b });
        self.push(Expr::RescaleConst { a: raw, den: self.scale() })
    }

    pub fn rescale(&mut self, a: SymId, den: i128) -> SymId {
        self.push(Expr::RescaleConst { a, den })
    }

    pub fn finish(self, outputs: Vec<SymId>) -> Result<PieceProgram> {
        let p = PieceProgram {
            rat: self.rat,
            num_public: self.num_public,
            num_private: self.num_private,
            exprs: self.exprs,
            outputs,
        };
        p.validate()?;
        Ok(p)
    }
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

/// The integer evaluation of a piece program: one signed value per symbol,
/// at scale 10^rat, together with the expressions that produced it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedTrace {
    pub rat: u32,
    pub syms: Vec<i128>,
    pub exprs: Vec<Expr>,
}

impl FixedTrace {
    pub fn value(&self, s: SymId) -> i128 {
        self.syms[s.0]
    }

    /// Decodes a symbol back to a float (testing/reporting only; the
    /// verification path never touches floats).
    pub fn decode(&self, s: SymId) -> f64 {
        self.syms[s.0] as f64 / pow10(self.rat) as f64
    }
}

const SYM_MIN: i128 = -(1i128 << 63);
const SYM_MAX: i128 = (1i128 << 63) - 1;

fn check_sym(v: i128, context: &'static str) -> Result<i128> {
    if (SYM_MIN..=SYM_MAX).contains(&v) {
        Ok(v)
    } else {
        Err(Error::Overflow { context })
    }
}

/// Runs `program` over the given inputs in exact integer arithmetic.
pub fn execute(program: &PieceProgram, public: &[i128], private: &[i128]) -> Result<FixedTrace> {
    program.validate()?;
    if public.len() != program.num_public {
        return Err(Error::LengthMismatch { expected: program.num_public, got: public.len() });
    }
    if private.len() != program.num_private {
        return Err(Error::LengthMismatch { expected: program.num_private, got: private.len() });
    }
    let mut syms = Vec::with_capacity(program.num_syms());
    for v in public.iter().chain(private) {
        syms.push(check_sym(*v, "input")?);
    }
    for e in &program.exprs {
        let v = match *e {
            Expr::Add { a, b } => syms[a.0]
                .checked_add(syms[b.0])
                .ok_or(Error::Overflow { context: "add" })?,
            Expr::Sub { a, b } => syms[a.0]
                .checked_sub(syms[b.0])
                .ok_or(Error::Overflow { context: "sub" })?,
            Expr::Mul { a, b } => syms[a.0]
                .checked_mul(syms[b.0])
                .ok_or(Error::Overflow { context: "mul" })?,
            Expr::MulConst { a, c } => syms[a.0]
                .checked_mul(c)
                .ok_or(Error::Overflow { context: "mul-const" })?,
            Expr::AddConst { a, c } => syms[a.0]
                .checked_add(c)
                .ok_or(Error::Overflow { context: "add-const" })?,
            // Rust integer division truncates toward zero, exactly the
            // rounding rule the rescale constraint encodes.
            Expr::RescaleConst { a, den } => syms[a.0] / den,
            Expr::RecipDiv { a, num, k_bits } => {
                let den = syms[a.0];
                if den <= 0 {
                    return Err(Error::NonPositiveDenominator { context: "reciprocal" });
                }
                if den - 1 >= (1i128 << k_bits) {
                    return Err(Error::OutOfDomain(format!(
                        "reciprocal denominator {den} exceeds its {k_bits}-bit range check"
                    )));
                }
                num / den
            }
        };
        syms.push(check_sym(v, "expression result")?);
    }
    Ok(FixedTrace { rat: program.rat, syms, exprs: program.exprs.clone() })
}

// ---------------------------------------------------------------------------
// Ratio selection and scaling
// ---------------------------------------------------------------------------

/// Largest scale exponent rat ∈ [0, MAX_RAT] such that every trace value
/// scaled by 10^rat stays inside [−2^63, 2^63−1]. Degenerate all-zero
/// traces scale freely and take the cap.
pub fn compute_ratio(trace: &[f64]) -> Result<u32> {
    if trace.is_empty() {
        return Err(Error::OutOfDomain("empty float trace".into()));
    }
    let max = trace.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = trace.iter().cloned().fold(f64::INFINITY, f64::min);
    let fits = |rat: u32| {
        let s = 10f64.powi(rat as i32);
        max * s <= SYM_MAX as f64 && min * s >= SYM_MIN as f64
    };
    if !fits(0) {
        return Err(Error::Overflow { context: "float trace exceeds integer range unscaled" });
    }
    let mut rat = 0;
    while rat < MAX_RAT && fits(rat + 1) {
        rat += 1;
    }
    Ok(rat)
}

/// Scales float values to integers at 10^rat, rounding to nearest (the
/// inputs are decimal-valued; nearest undoes binary representation noise).
pub fn scale_trace(trace: &[f64], rat: u32) -> Result<Vec<i128>> {
    let s = pow10(rat) as f64;
    trace
        .iter()
        .map(|v| {
            let scaled = (v * s).round();
            if !scaled.is_finite() || scaled > SYM_MAX as f64 || scaled < SYM_MIN as f64 {
                return Err(Error::Overflow { context: "scaled trace value" });
            }
            Ok(scaled as i128)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Taylor replacement of the sigmoid
// ---------------------------------------------------------------------------

/// Non-linear operation with a polynomial replacement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NonLinOp {
    /// σ(x) = 1/(1+e^{−x}), replaced by 1/(1 + Σ_k (−x)^k/k!).
    Sigmoid,
}

impl NonLinOp {
    pub fn exact(&self, x: f64) -> f64 {
        match self {
            NonLinOp::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        }
    }
}

/// Exact rational coefficient of one expansion term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rational {
    pub num: i64,
    pub den: i64,
}

/// A truncated expansion accepted against an error bound on a set of
/// evaluation points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaylorApprox {
    pub op: NonLinOp,
    pub order: u32,
    /// Term coefficients c_0..c_order of the inner series (for the sigmoid,
    /// the expansion of e^{−x}: c_k = (−1)^k / k!).
    pub coefficients: Vec<Rational>,
    pub error_bound: f64,
    pub eval_points: Vec<f64>,
}

fn sigmoid_series_coefficients(order: u32) -> Vec<Rational> {
    let mut out = Vec::with_capacity(order as usize + 1);
    let mut fact: i64 = 1;
    for k in 0..=order {
        if k > 0 {
            fact *= k as i64;
        }
        out.push(Rational { num: if k % 2 == 0 { 1 } else { -1 }, den: fact });
    }
    out
}

impl TaylorApprox {
    /// Builds the approximation at a fixed order without selection.
    pub fn sigmoid(order: u32, error_bound: f64, eval_points: Vec<f64>) -> Self {
        TaylorApprox {
            op: NonLinOp::Sigmoid,
            order,
            coefficients: sigmoid_series_coefficients(order),
            error_bound,
            eval_points,
        }
    }

    /// Float evaluation of the approximation (reference for error
    /// measurement; the circuit path is [`emit_sigmoid`]).
    pub fn approx_float(&self, x: f64) -> f64 {
        let mut series = 0.0;
        let mut pow = 1.0;
        for c in &self.coefficients {
            series += pow * c.num as f64 / c.den as f64;
            pow *= x;
        }
        1.0 / (1.0 + series)
    }

    pub fn max_error(&self) -> f64 {
        self.eval_points
            .iter()
            .map(|x| (self.approx_float(*x) - self.op.exact(*x)).abs())
            .fold(0.0, f64::max)
    }
}

/// Selects the smallest expansion order meeting `e_bound` at every
/// evaluation point, starting from order 0. `max_err_init` seeds the error
/// before the first measurement (any value > e_bound).
pub fn taylor_select(
    op: NonLinOp,
    eval_points: &[f64],
    e_bound: f64,
    max_err_init: f64,
) -> Result<TaylorApprox> {
    assert!(e_bound > 0.0, "error bound must be positive");
    let mut err = max_err_init;
    let mut order = 0;
    while err > e_bound {
        if order > MAX_TAYLOR_ORDER {
            return Err(Error::OrderCeiling(MAX_TAYLOR_ORDER));
        }
        let candidate = match op {
            NonLinOp::Sigmoid => TaylorApprox::sigmoid(order, e_bound, eval_points.to_vec()),
        };
        err = candidate.max_error();
        if err <= e_bound {
            return Ok(candidate);
        }
        order += 1;
    }
    // max_err_init already ≤ bound: degenerate call, order 0 stands.
    Ok(match op {
        NonLinOp::Sigmoid => TaylorApprox::sigmoid(0, e_bound, eval_points.to_vec()),
    })
}

/// Emits the fixed-point expressions computing `approx` at symbol `x`
/// (scale 10^rat) and returns the result symbol. This is the only
/// definition of the in-circuit sigmoid; `approx_eval` runs the same
/// expressions.
///
/// Layout: powers of −x maintained at scale 10^rat, each term divided by
/// its factorial, the "1 +" absorbed as an additive constant, and one
/// reciprocal out = trunc(10^{2rat} / den).
pub fn emit_sigmoid(b: &mut ProgramBuilder, approx: &TaylorApprox, x: SymId) -> SymId {
    let s = b.scale();
    let neg = b.mul_const(x, -1);
    // acc = 1 + (−x), covering terms k = 0 and 1.
    let mut acc = b.add_const(neg, s);
    let mut power = neg;
    for k in 2..=approx.order as usize {
        // (−x)^k carries the alternating sign itself, so each term is the
        // power divided by the coefficient's magnitude, always added.
        power = b.mul_rescaled(power, neg);
        let term = b.rescale(power, approx.coefficients[k].den.unsigned_abs() as i128);
        acc = b.add(acc, term);
    }
    let den = b.add_const(acc, s);
    // Honest denominators stay below (1 + e^{|x|})·10^rat; 4·10^rat covers
    // the whole validated domain |x| ≤ 1 with margin.
    let k_bits = 128 - (4 * s as u128).leading_zeros();
    b.push(Expr::RecipDiv { a: den, num: s * s, k_bits })
}

/// Evaluates the approximation on one fixed-point value by emitting and
/// executing its expressions — the integer path, not the float reference.
pub fn approx_eval(approx: &TaylorApprox, x: i128, rat: u32) -> Result<i128> {
    let mut b = ProgramBuilder::new(rat);
    let xin = b.public_input();
    let out = emit_sigmoid(&mut b, approx, xin);
    let program = b.finish(vec![out])?;
    let trace = execute(&program, &[x], &[])?;
    Ok(trace.value(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    const S7: i128 = 10_000_000;

    #[test]
    fn ratio_argmax_against_integer_bounds() {
        // Largest rat keeping 3.2·10^rat within 2^63−1 exceeds the cap.
        assert_eq!(compute_ratio(&[3.2, -1.5]).unwrap(), 18);
        // All-zero trace scales freely; capped.
        assert_eq!(compute_ratio(&[0.0, 0.0]).unwrap(), MAX_RAT);
        // Large values lower the argmax.
        assert_eq!(compute_ratio(&[9.0e17]).unwrap(), 1);
        // Already out of range unscaled.
        assert!(matches!(compute_ratio(&[1.0e19]), Err(Error::Overflow { .. })));
        assert!(compute_ratio(&[]).is_err());
    }

    #[test]
    fn scaling_examples() {
        let scaled = scale_trace(&[0.5, 0.25, -0.3, 0.2], 7).unwrap();
        assert_eq!(scaled, vec![5_000_000, 2_500_000, -3_000_000, 2_000_000]);

        // 0.5 + 0.25 at rat 7.
        assert_eq!(scaled[0] + scaled[1], 7_500_000);

        // 0.5 × 0.5: product at doubled scale, rescale brings it back.
        let mut b = ProgramBuilder::new(7);
        let a = b.public_input();
        let out = b.mul_rescaled(a, a);
        let p = b.finish(vec![out]).unwrap();
        let t = execute(&p, &[5_000_000], &[]).unwrap();
        assert_eq!(t.syms[1], 25_000_000_000_000); // pre-rescale product
        assert_eq!(t.value(out), 2_500_000);

        // (−0.3) × 0.2 → −600,000 with remainder 0.
        let mut b = ProgramBuilder::new(7);
        let a = b.public_input();
        let c = b.private_input();
        let out = b.mul_rescaled(a, c);
        let p = b.finish(vec![out]).unwrap();
        let t = execute(&p, &[-3_000_000], &[2_000_000]).unwrap();
        assert_eq!(t.value(out), -600_000);
        let rem = t.syms[2] - S7 * t.value(out);
        assert_eq!(rem, 0);
    }

    #[test]
    fn truncation_is_toward_zero() {
        let mut b = ProgramBuilder::new(7);
        let a = b.public_input();
        let out = b.rescale(a, 10);
        let p = b.finish(vec![out]).unwrap();
        assert_eq!(execute(&p, &[-17], &[]).unwrap().value(out), -1);
        assert_eq!(execute(&p, &[17], &[]).unwrap().value(out), 1);
    }

    #[test]
    fn execute_rejects_overflow_and_bad_inputs() {
        let mut b = ProgramBuilder::new(7);
        let a = b.public_input();
        let out = b.push(Expr::Mul { a, b: a });
        let p = b.finish(vec![out]).unwrap();
        // (2^62)² bursts the per-symbol range.
        assert!(matches!(
            execute(&p, &[1i128 << 62], &[]),
            Err(Error::Overflow { .. })
        ));
        assert!(matches!(
            execute(&p, &[1, 2], &[]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn recip_div_guards() {
        let mut b = ProgramBuilder::new(7);
        let a = b.public_input();
        let out = b.push(Expr::RecipDiv { a, num: S7 * S7, k_bits: 26 });
        let p = b.finish(vec![out]).unwrap();
        assert!(matches!(
            execute(&p, &[0], &[]),
            Err(Error::NonPositiveDenominator { .. })
        ));
        assert!(matches!(
            execute(&p, &[-5], &[]),
            Err(Error::NonPositiveDenominator { .. })
        ));
        // Above the range check's reach.
        assert!(matches!(execute(&p, &[1i128 << 27], &[]), Err(Error::OutOfDomain(_))));
        // Honest value: 1/2 at scale 7.
        assert_eq!(execute(&p, &[2 * S7], &[]).unwrap().value(out), 5_000_000);
    }

    #[test]
    fn program_validation() {
        // Unequal statement halves.
        let mut b = ProgramBuilder::new(7);
        let a = b.public_input();
        let _ = b.public_input();
        let out = b.add(a, a);
        assert!(matches!(
            b.finish(vec![out]),
            Err(Error::BadStatementLayout(3))
        ));

        // Forward reference.
        let p = PieceProgram {
            rat: 7,
            num_public: 1,
            num_private: 0,
            exprs: vec![Expr::Add { a: SymId(0), b: SymId(2) }],
            outputs: vec![SymId(1)],
        };
        assert!(matches!(p.validate(), Err(Error::UndefinedSymbol(_))));

        // Empty program.
        let p = PieceProgram {
            rat: 7,
            num_public: 0,
            num_private: 0,
            exprs: vec![],
            outputs: vec![],
        };
        assert!(matches!(p.validate(), Err(Error::EmptyProgram)));
    }

    #[test]
    fn sigmoid_symmetry_point_is_exact() {
        // Any order: x = 0 → exactly one half, both in float and fixed form.
        for order in [0u32, 2, 5] {
            let approx = TaylorApprox::sigmoid(order, 1e-4, vec![0.0]);
            assert_eq!(approx.approx_float(0.0), 0.5);
            assert_eq!(approx_eval(&approx, 0, 7).unwrap(), 5_000_000);
        }
    }

    #[test]
    fn fifth_order_meets_bound_at_half() {
        let approx = TaylorApprox::sigmoid(5, 1e-4, vec![0.5]);
        let err = (approx.approx_float(0.5) - NonLinOp::Sigmoid.exact(0.5)).abs();
        // Direct series-vs-exact evaluation gives ≈ 7.8·10^{−6}.
        assert!(err < 1e-5, "error {err}");
        assert!(err > 1e-6);
    }

    #[test]
    fn selection_picks_smallest_sufficient_order() {
        let points: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.05).collect();
        let approx = taylor_select(NonLinOp::Sigmoid, &points, 1e-4, f64::MAX).unwrap();
        // On |x| ≤ 0.5 the bound is met at order 4 and not at order 3.
        assert_eq!(approx.order, 4);
        assert!(approx.max_error() <= 1e-4);
        let lower = TaylorApprox::sigmoid(3, 1e-4, points.clone());
        assert!(lower.max_error() > 1e-4);
    }

    #[test]
    fn selection_continues_past_order_five_at_one() {
        let approx = taylor_select(NonLinOp::Sigmoid, &[1.0], 1e-4, f64::MAX).unwrap();
        assert_eq!(approx.order, 6);
        // Order 5 is insufficient at x = 1.
        assert!(TaylorApprox::sigmoid(5, 1e-4, vec![1.0]).max_error() > 1e-4);
    }

    #[test]
    fn selection_respects_order_ceiling() {
        // Far outside the radius where low orders help: the series for
        // e^{−30} is nowhere near convergent within the order ceiling.
        assert!(matches!(
            taylor_select(NonLinOp::Sigmoid, &[30.0], 1e-4, f64::MAX),
            Err(Error::OrderCeiling(_))
        ));
    }

    #[test]
    fn fixed_point_sigmoid_tracks_float_reference() {
        let approx = TaylorApprox::sigmoid(5, 1e-4, vec![]);
        for x10 in -5..=5i128 {
            let x = x10 * S7 / 10; // −0.5 … 0.5 in steps of 0.1
            let got = approx_eval(&approx, x, 7).unwrap();
            let exact = NonLinOp::Sigmoid.exact(x as f64 / S7 as f64);
            let diff = (got - (exact * S7 as f64).round() as i128).abs();
            // Approximation error bound plus a few units of truncation.
            assert!(diff <= 1_020, "x={x} got={got} exact={exact} diff={diff}");
        }
    }

    #[test]
    fn emitted_sigmoid_is_pure_fixed_point() {
        // The emitted expression list contains only the seven integer ops
        // and exactly one reciprocal.
        let approx = TaylorApprox::sigmoid(5, 1e-4, vec![]);
        let mut b = ProgramBuilder::new(7);
        let x = b.public_input();
        let out = emit_sigmoid(&mut b, &approx, x);
        let p = b.finish(vec![out]).unwrap();
        let recips = p
            .exprs
            .iter()
            .filter(|e| matches!(e, Expr::RecipDiv { .. }))
            .count();
        assert_eq!(recips, 1);
    }
}
