//! Desk-scale training tasks, piece splitting, and local training.
//!
//! A training run is `rounds` passes over a trainer's samples; every
//! (sample, iteration) is one unit of work, and units are grouped into
//! structurally identical pieces — the circuit is built once per task and
//! piece identity lives entirely in the assignment. Training itself is
//! sequential (piece i+1 consumes piece i's outputs); proving over the
//! recorded traces is where parallelism happens.
//!
//! Two model families ship: a 4-feature binary logistic classifier and a
//! 1–3 feature linear regressor. Both update all parameters with one
//! gradient step per unit, with the learning rate 10^{−lr_exp} folded into
//! the step's rescale divisor so it costs no extra constraint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantize::{
    emit_sigmoid, execute, pow10, scale_trace, taylor_select, FixedTrace, NonLinOp, PieceProgram,
    ProgramBuilder, SymId, TaylorApprox, MAX_RAT,
};

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

/// A small labeled dataset: rows of features plus one numeric label.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub label_name: String,
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
}

impl Dataset {
    /// Parses CSV text: a header row, feature columns, label last.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header = reader
            .headers()
            .map_err(|e| Error::Dataset(e.to_string()))?
            .clone();
        if header.len() < 2 {
            return Err(Error::Dataset(
                "need at least one feature column and a label column".into(),
            ));
        }
        let feature_names: Vec<String> =
            header.iter().take(header.len() - 1).map(str::to_string).collect();
        let label_name = header.iter().last().unwrap().to_string();
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Dataset(e.to_string()))?;
            let mut row: Vec<f64> = record
                .iter()
                .map(|cell| {
                    cell.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Dataset(format!("non-numeric cell {cell:?}")))
                })
                .collect::<Result<_>>()?;
            let label = row.pop().expect("record width checked by the csv reader");
            features.push(row);
            labels.push(label);
        }
        if features.is_empty() {
            return Err(Error::Dataset("no data rows".into()));
        }
        Ok(Dataset { feature_names, label_name, features, labels })
    }

    pub fn from_csv_path(path: &std::path::Path) -> Result<Self> {
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }

    /// Bundled 40-row binary classification fixture: two iris species,
    /// features centered and scaled into (−0.5, 0.5), classes alternating
    /// row by row so contiguous even-length chunks stay balanced.
    pub fn iris_binary() -> Dataset {
        Self::from_csv_str(include_str!("../data/iris_binary.csv"))
            .expect("bundled fixture parses")
    }

    /// Bundled 24-row single-feature regression fixture around
    /// y = 0.7x + 0.15 with alternating ±0.013 noise.
    pub fn linreg() -> Dataset {
        Self::from_csv_str(include_str!("../data/linreg.csv")).expect("bundled fixture parses")
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Rows start..end as their own dataset.
    pub fn range(&self, start: usize, end: usize) -> Result<Dataset> {
        if start >= end || end > self.len() {
            return Err(Error::Dataset(format!(
                "row range {start}..{end} outside 0..{}",
                self.len()
            )));
        }
        Ok(Dataset {
            feature_names: self.feature_names.clone(),
            label_name: self.label_name.clone(),
            features: self.features[start..end].to_vec(),
            labels: self.labels[start..end].to_vec(),
        })
    }
}

/// One dataset row in fixed-point at the task's scale.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantRow {
    pub features: Vec<i128>,
    pub label: i128,
}

/// Scales every row to integers at 10^rat.
pub fn quantize_dataset(data: &Dataset, rat: u32) -> Result<Vec<QuantRow>> {
    data.features
        .iter()
        .zip(&data.labels)
        .map(|(f, y)| {
            let mut row = f.clone();
            row.push(*y);
            let mut scaled = scale_trace(&row, rat)?;
            let label = scaled.pop().unwrap();
            Ok(QuantRow { features: scaled, label })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Tasks
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    /// Linear regression: prediction is the affine score itself.
    Identity,
    /// Logistic classification through the in-circuit sigmoid replacement.
    Sigmoid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub features: usize,
    pub activation: Activation,
}

impl ModelSpec {
    /// The classifier task: 4 features, sigmoid activation.
    pub fn logistic4() -> Self {
        ModelSpec { features: 4, activation: Activation::Sigmoid }
    }

    /// The regressor task, 1–3 features.
    pub fn linear(features: usize) -> Result<Self> {
        if !(1..=3).contains(&features) {
            return Err(Error::BadTask(format!(
                "linear regressor supports 1–3 features, got {features}"
            )));
        }
        Ok(ModelSpec { features, activation: Activation::Identity })
    }

    /// Weights plus bias.
    pub fn num_params(&self) -> usize {
        self.features + 1
    }
}

/// A configured training run for one trainer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingTask {
    pub model: ModelSpec,
    /// Learning rate 10^{−lr_exp}; a power of ten so the rate folds into
    /// the gradient step's rescale divisor.
    pub lr_exp: u32,
    /// Passes over the trainer's samples.
    pub rounds: u32,
    /// Samples per trainer.
    pub samples: u32,
    pub rat: u32,
    /// Error bound for the sigmoid replacement (sigmoid tasks only).
    pub taylor_e: f64,
    /// Piece count q; must divide rounds·samples. The constructors default
    /// to one (sample, iteration) per piece.
    pub q: u32,
}

impl TrainingTask {
    pub fn new(model: ModelSpec, lr_exp: u32, rounds: u32, samples: u32, rat: u32) -> Self {
        TrainingTask {
            model,
            lr_exp,
            rounds,
            samples,
            rat,
            taylor_e: 1e-4,
            q: rounds * samples,
        }
    }

    /// The desk classifier: 8 samples × 10 rounds, learning rate 0.01,
    /// scale 10^7 — 80 pieces per trainer.
    pub fn desk_logistic() -> Self {
        Self::new(ModelSpec::logistic4(), 2, 10, 8, 7)
    }

    /// The desk regressor at the same shape.
    pub fn desk_linreg() -> Self {
        Self::new(ModelSpec::linear(1).unwrap(), 2, 10, 8, 7)
    }

    pub fn with_pieces(mut self, q: u32) -> Self {
        self.q = q;
        self
    }

    /// Total (sample, iteration) units.
    pub fn units(&self) -> u32 {
        self.rounds * self.samples
    }

    /// Units folded into each piece.
    pub fn steps_per_piece(&self) -> u32 {
        self.units() / self.q.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 || self.samples == 0 {
            return Err(Error::BadTask("rounds and samples must be positive".into()));
        }
        if self.rat == 0 || self.rat > MAX_RAT {
            return Err(Error::BadTask(format!("scale exponent {} out of range", self.rat)));
        }
        if self.lr_exp > MAX_RAT {
            return Err(Error::BadTask(format!(
                "learning-rate exponent {} out of range",
                self.lr_exp
            )));
        }
        if self.model.activation == Activation::Sigmoid && self.taylor_e <= 0.0 {
            return Err(Error::BadTask("sigmoid error bound must be positive".into()));
        }
        if self.q == 0 || self.units() % self.q != 0 {
            return Err(Error::BadTask(format!(
                "piece count {} is not a factor of {} units",
                self.q,
                self.units()
            )));
        }
        Ok(())
    }

    /// Selects the sigmoid replacement over the validated activation domain
    /// |z| ≤ 0.5 — the dataset normalization contract — or None for
    /// identity-activation tasks.
    pub fn select_sigmoid(&self) -> Result<Option<TaylorApprox>> {
        match self.model.activation {
            Activation::Identity => Ok(None),
            Activation::Sigmoid => {
                let points: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.05).collect();
                Ok(Some(taylor_select(NonLinOp::Sigmoid, &points, self.taylor_e, f64::MAX)?))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Piece splitting
// ---------------------------------------------------------------------------

/// One (round, sample) unit of work.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unit {
    pub round: u32,
    pub sample: u32,
}

/// Which units a piece consumes. Pieces are structurally identical; only
/// the sample indices feeding the witness differ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PieceSpec {
    /// 1-based, aligned with proof bundle indices.
    pub index: u32,
    pub units: Vec<Unit>,
}

/// Splits a task into q pieces of units/q consecutive (round, sample)
/// units, round-major.
pub fn split(task: &TrainingTask, q: u32) -> Result<Vec<PieceSpec>> {
    let units = task.units();
    if task.rounds == 0 || task.samples == 0 {
        return Err(Error::BadTask("rounds and samples must be positive".into()));
    }
    if q == 0 || units % q != 0 {
        return Err(Error::BadTask(format!("piece count {q} is not a factor of {units} units")));
    }
    let per = units / q;
    Ok((0..q)
        .map(|k| PieceSpec {
            index: k + 1,
            units: (k * per..(k + 1) * per)
                .map(|u| Unit { round: u / task.samples, sample: u % task.samples })
                .collect(),
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Circuit program construction
// ---------------------------------------------------------------------------

/// Where the interesting intermediate symbols of a built program live.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgramMeta {
    /// Pre-activation score z = w·x + b, one per gradient step.
    pub z_syms: Vec<SymId>,
}

/// Builds the shared piece program: `steps_per_piece` gradient steps, each
/// consuming one private sample and updating every parameter. Parameters
/// enter as the public input half; the final step's updates claim the
/// output half, so every statement slot is referenced by construction.
pub fn build_program(
    task: &TrainingTask,
    approx: Option<&TaylorApprox>,
) -> Result<(PieceProgram, ProgramMeta)> {
    task.validate()?;
    let f = task.model.features;
    let steps = task.steps_per_piece() as usize;
    if task.model.activation == Activation::Sigmoid && approx.is_none() {
        return Err(Error::BadTask("sigmoid task needs a selected approximation".into()));
    }

    let mut b = ProgramBuilder::new(task.rat);
    let scale = b.scale();
    let mut params: Vec<SymId> = (0..task.model.num_params()).map(|_| b.public_input()).collect();
    let samples: Vec<(Vec<SymId>, SymId)> = (0..steps)
        .map(|_| {
            let xs: Vec<SymId> = (0..f).map(|_| b.private_input()).collect();
            (xs, b.private_input())
        })
        .collect();

    let mut z_syms = Vec::with_capacity(steps);
    for (xs, y) in &samples {
        let (weights, bias) = params.split_at(f);
        // Affine score accumulated at the doubled scale, one rescale total.
        let mut raw = b.push(crate::quantize::Expr::Mul { a: weights[0], b: xs[0] });
        for j in 1..f {
            let prod = b.push(crate::quantize::Expr::Mul { a: weights[j], b: xs[j] });
            raw = b.add(raw, prod);
        }
        let bias_raw = b.mul_const(bias[0], scale);
        raw = b.add(raw, bias_raw);
        let z = b.rescale(raw, scale);
        z_syms.push(z);

        let p = match task.model.activation {
            Activation::Identity => z,
            Activation::Sigmoid => emit_sigmoid(&mut b, approx.unwrap(), z),
        };
        let err = b.sub(p, *y);

        // w_j ← w_j − trunc(err·x_j / 10^{rat+lr_exp}): the learning rate
        // rides along in the divisor.
        let step_den = pow10(task.rat + task.lr_exp);
        let mut next = Vec::with_capacity(params.len());
        for j in 0..f {
            let g_raw = b.push(crate::quantize::Expr::Mul { a: err, b: xs[j] });
            let step = b.rescale(g_raw, step_den);
            next.push(b.sub(weights[j], step));
        }
        let bias_step = b.rescale(err, pow10(task.lr_exp));
        next.push(b.sub(bias[0], bias_step));
        params = next;
    }

    let program = b.finish(params)?;
    Ok((program, ProgramMeta { z_syms }))
}

// ---------------------------------------------------------------------------
// Local training
// ---------------------------------------------------------------------------

/// One executed piece: incoming parameters, outgoing parameters, and the
/// full trace (sample data and intermediate wires — the witness).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PieceIO {
    /// 1-based, aligned with proof bundle indices.
    pub index: u32,
    pub inputs: Vec<i128>,
    pub outputs: Vec<i128>,
    pub trace: FixedTrace,
}

/// The trained local model: the last piece's output slots plus metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalModel {
    pub params: Vec<i128>,
    pub rat: u32,
    pub rounds: u32,
    /// Held-out classification accuracy; absent for regression tasks or an
    /// empty holdout.
    pub accuracy: Option<f64>,
}

/// Divergence guard: parameters past ±10^4 (decoded) have left any regime
/// the desk tasks can reach honestly and would soon overflow raw products.
fn check_divergence(params: &[i128], rat: u32) -> Result<()> {
    let bound = pow10(rat + 4);
    if params.iter().any(|p| p.abs() >= bound) {
        return Err(Error::Divergence);
    }
    Ok(())
}

/// Runs one piece: executes the program on the incoming parameters and the
/// piece's sample rows, returning the chained I/O.
pub fn run_piece(
    program: &PieceProgram,
    index: u32,
    params: &[i128],
    rows: &[QuantRow],
) -> Result<PieceIO> {
    let mut private = Vec::new();
    for row in rows {
        private.extend_from_slice(&row.features);
        private.push(row.label);
    }
    let trace = execute(program, params, &private)?;
    let outputs: Vec<i128> = program.outputs.iter().map(|o| trace.value(*o)).collect();
    Ok(PieceIO { index, inputs: params.to_vec(), outputs, trace })
}

/// Local training: splits the task into pieces, runs them chained, and
/// returns the final model with every piece's I/O. Fails fast on overflow,
/// divergence, or an activation outside the sigmoid's validated domain.
pub fn train_local(
    task: &TrainingTask,
    program: &PieceProgram,
    meta: &ProgramMeta,
    train: &Dataset,
    holdout: &Dataset,
    p0: &[i128],
) -> Result<(LocalModel, Vec<PieceIO>)> {
    task.validate()?;
    if train.len() != task.samples as usize {
        return Err(Error::Dataset(format!(
            "task expects {} training samples, dataset has {}",
            task.samples,
            train.len()
        )));
    }
    if train.num_features() != task.model.features {
        return Err(Error::Dataset(format!(
            "task expects {} features, dataset has {}",
            task.model.features,
            train.num_features()
        )));
    }
    if p0.len() != task.model.num_params() {
        return Err(Error::LengthMismatch {
            expected: task.model.num_params(),
            got: p0.len(),
        });
    }

    let specs = split(task, task.q)?;
    let rows = quantize_dataset(train, task.rat)?;
    // Validated sigmoid domain |z| ≤ 0.5, in fixed-point units.
    let z_bound = pow10(task.rat) / 2;

    let mut params = p0.to_vec();
    let mut pieces = Vec::with_capacity(specs.len());
    for spec in &specs {
        let piece_rows: Vec<QuantRow> =
            spec.units.iter().map(|u| rows[u.sample as usize].clone()).collect();
        let io = run_piece(program, spec.index, &params, &piece_rows)?;
        if task.model.activation == Activation::Sigmoid {
            for z in &meta.z_syms {
                let v = io.trace.value(*z);
                if v.abs() > z_bound {
                    return Err(Error::OutOfDomain(format!(
                        "piece {} activation {v} outside the validated sigmoid domain",
                        spec.index
                    )));
                }
            }
        }
        params = io.outputs.clone();
        check_divergence(&params, task.rat)?;
        pieces.push(io);
    }

    let accuracy = match (task.model.activation, holdout.is_empty()) {
        (Activation::Sigmoid, false) => {
            Some(classification_accuracy(&decode_params(&params, task.rat), holdout))
        }
        _ => None,
    };
    let model = LocalModel { params, rat: task.rat, rounds: task.rounds, accuracy };
    Ok((model, pieces))
}

/// The decoded pre-activation scores of every step of a run, in piece
/// order — the observed activations the sigmoid replacement must cover.
pub fn observed_activations(pieces: &[PieceIO], meta: &ProgramMeta) -> Vec<i128> {
    pieces
        .iter()
        .flat_map(|p| meta.z_syms.iter().map(|z| p.trace.value(*z)))
        .collect()
}

// ---------------------------------------------------------------------------
// Float reference pipelines
// ---------------------------------------------------------------------------

/// Which float reference to train against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FloatRefMode {
    /// Plain f64 gradient descent with the exact activation — the
    /// scientific reference the integer pipeline is supposed to track.
    IndependentExact,
    /// The integer pipeline's own recurrence (truncating divisions, series
    /// sigmoid) carried independently of the circuit IR and decoded to
    /// floats — a direct cross-check of the circuit execution path.
    CoupledQuantized,
}

/// Mirrors the emitted fixed-point sigmoid — same series, same truncation
/// points, same guards — without going through the expression IR.
fn sigmoid_fixed(approx: &TaylorApprox, z: i128, rat: u32) -> Result<i128> {
    let s = pow10(rat);
    let neg = -z;
    let mut acc = neg + s;
    let mut power = neg;
    for k in 2..=approx.order as usize {
        power = power * neg / s;
        acc += power / approx.coefficients[k].den.unsigned_abs() as i128;
    }
    let den = acc + s;
    if den <= 0 {
        return Err(Error::NonPositiveDenominator { context: "reciprocal" });
    }
    let k_bits = 128 - (4 * s as u128).leading_zeros();
    if den - 1 >= 1i128 << k_bits {
        return Err(Error::OutOfDomain(format!(
            "reciprocal denominator {den} exceeds its {k_bits}-bit range check"
        )));
    }
    Ok(s * s / den)
}

/// Trains the float reference over the same sample order as the integer
/// pipeline and returns the final decoded parameters.
pub fn train_float(
    task: &TrainingTask,
    train: &Dataset,
    p0: &[f64],
    mode: FloatRefMode,
    approx: Option<&TaylorApprox>,
) -> Result<Vec<f64>> {
    task.validate()?;
    if p0.len() != task.model.num_params() {
        return Err(Error::LengthMismatch {
            expected: task.model.num_params(),
            got: p0.len(),
        });
    }
    let f = task.model.features;
    match mode {
        FloatRefMode::IndependentExact => {
            let lr = 10f64.powi(-(task.lr_exp as i32));
            let mut params = p0.to_vec();
            for _ in 0..task.rounds {
                for (x, y) in train.features.iter().zip(&train.labels) {
                    let z: f64 =
                        x.iter().zip(&params[..f]).map(|(a, w)| a * w).sum::<f64>() + params[f];
                    let p = match task.model.activation {
                        Activation::Identity => z,
                        Activation::Sigmoid => NonLinOp::Sigmoid.exact(z),
                    };
                    let err = p - y;
                    for j in 0..f {
                        params[j] -= lr * err * x[j];
                    }
                    params[f] -= lr * err;
                }
            }
            Ok(params)
        }
        FloatRefMode::CoupledQuantized => {
            if task.model.activation == Activation::Sigmoid && approx.is_none() {
                return Err(Error::BadTask(
                    "coupled reference needs the selected approximation".into(),
                ));
            }
            let s = pow10(task.rat);
            let rows = quantize_dataset(train, task.rat)?;
            let mut params = scale_trace(p0, task.rat)?;
            let step_den = pow10(task.rat + task.lr_exp);
            for _ in 0..task.rounds {
                for row in &rows {
                    let raw: i128 = row
                        .features
                        .iter()
                        .zip(&params[..f])
                        .map(|(a, w)| a * w)
                        .sum::<i128>()
                        + params[f] * s;
                    let z = raw / s;
                    let p = match task.model.activation {
                        Activation::Identity => z,
                        Activation::Sigmoid => sigmoid_fixed(approx.unwrap(), z, task.rat)?,
                    };
                    let err = p - row.label;
                    for j in 0..f {
                        params[j] -= err * row.features[j] / step_den;
                    }
                    params[f] -= err / pow10(task.lr_exp);
                }
            }
            Ok(decode_params(&params, task.rat))
        }
    }
}

// ---------------------------------------------------------------------------
// Prediction helpers
// ---------------------------------------------------------------------------

pub fn decode_params(params: &[i128], rat: u32) -> Vec<f64> {
    let s = pow10(rat) as f64;
    params.iter().map(|p| *p as f64 / s).collect()
}

/// Model score for one row: σ(w·x + b) or the affine value itself.
pub fn predict(params: &[f64], x: &[f64], activation: Activation) -> f64 {
    let f = params.len() - 1;
    let z: f64 = x.iter().zip(&params[..f]).map(|(a, w)| a * w).sum::<f64>() + params[f];
    match activation {
        Activation::Identity => z,
        Activation::Sigmoid => NonLinOp::Sigmoid.exact(z),
    }
}

/// Fraction of rows two parameter vectors classify identically (σ ≥ 0.5).
pub fn classification_agreement(a: &[f64], b: &[f64], data: &Dataset) -> f64 {
    let same = data
        .features
        .iter()
        .filter(|x| {
            (predict(a, x, Activation::Sigmoid) >= 0.5)
                == (predict(b, x, Activation::Sigmoid) >= 0.5)
        })
        .count();
    same as f64 / data.len() as f64
}

/// Fraction of rows classified correctly against 0/1 labels.
pub fn classification_accuracy(params: &[f64], data: &Dataset) -> f64 {
    let correct = data
        .features
        .iter()
        .zip(&data.labels)
        .filter(|(x, y)| (predict(params, x, Activation::Sigmoid) >= 0.5) == (**y >= 0.5))
        .count();
    correct as f64 / data.len() as f64
}
