//! Run configuration: the versioned, human-editable file that pins every
//! parameter of an experiment. The publisher writes a resolved snapshot
//! (seed filled in) next to the setup artifacts so trainers and verifiers
//! reconstruct the exact same circuit and randomness.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use zkfl::paillier::KeyProfile;
use zkfl::quantize::TaylorApprox;
use zkfl::trainer::{Dataset, ModelSpec, TrainingTask};

pub const CONFIG_VERSION: u32 = 1;

/// Everything a run needs. Defaults describe the desk classifier round:
/// three trainers, 8 samples x 10 rounds each, test-profile Paillier keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Config format version; this build reads version 1.
    pub version: u32,
    /// "logistic" (4-feature classifier) or "linreg" (1-feature regressor).
    pub task: String,
    /// Number of trainers on the aggregation ring.
    pub trainers: u32,
    /// Passes over each trainer's samples.
    pub rounds: u32,
    /// Training samples per trainer.
    pub samples: u32,
    /// Gradient steps folded into one proven piece.
    pub steps_per_piece: u32,
    /// Fixed-point scale exponent; values live at 10^{-rat}.
    pub rat: u32,
    /// Error budget for the sigmoid replacement.
    pub taylor_error: f64,
    /// Paillier key profile: "test" (64-bit primes) or "secure" (2048-bit).
    pub paillier_profile: String,
    /// Master seed; every key, noise list, and mask derives from it. Absent
    /// means "draw one from the OS" — the snapshot records the draw.
    pub seed: Option<u64>,
    /// Proving/verifying worker threads; absent means one per core.
    pub threads: Option<u32>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let task = TrainingTask::desk_logistic();
        RunConfig {
            version: CONFIG_VERSION,
            task: "logistic".into(),
            trainers: 3,
            rounds: task.rounds,
            samples: task.samples,
            steps_per_piece: 1,
            rat: task.rat,
            taylor_error: task.taylor_e,
            paillier_profile: "test".into(),
            seed: None,
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: RunConfig =
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if config.version != CONFIG_VERSION {
            bail!(
                "config {} has version {}, this build reads version {}",
                path.display(),
                config.version,
                CONFIG_VERSION
            );
        }
        config.validate()?;
        Ok(config)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self).context("serializing config")?;
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    /// The training task this config describes, validated.
    pub fn training_task(&self) -> Result<TrainingTask> {
        let model = match self.task.as_str() {
            "logistic" => ModelSpec::logistic4(),
            "linreg" => ModelSpec::linear(1)?,
            other => bail!("unknown task {other:?}: expected \"logistic\" or \"linreg\""),
        };
        let units = self.rounds * self.samples;
        if self.steps_per_piece == 0 || units % self.steps_per_piece != 0 {
            bail!(
                "steps_per_piece {} must divide rounds*samples = {units}",
                self.steps_per_piece
            );
        }
        let mut task = TrainingTask::new(model, 2, self.rounds, self.samples, self.rat)
            .with_pieces(units / self.steps_per_piece);
        task.taylor_e = self.taylor_error;
        task.validate()?;
        Ok(task)
    }

    /// The sigmoid replacement for this task, if it has one.
    pub fn approximation(&self) -> Result<Option<TaylorApprox>> {
        Ok(self.training_task()?.select_sigmoid()?)
    }

    pub fn key_profile(&self) -> Result<KeyProfile> {
        match self.paillier_profile.as_str() {
            "test" => Ok(KeyProfile::Test),
            "secure" => Ok(KeyProfile::Secure),
            other => bail!("unknown paillier profile {other:?}: expected \"test\" or \"secure\""),
        }
    }

    /// The bundled dataset backing the task.
    pub fn dataset(&self) -> Result<Dataset> {
        let data = match self.task.as_str() {
            "logistic" => Dataset::iris_binary(),
            "linreg" => Dataset::linreg(),
            other => bail!("unknown task {other:?}"),
        };
        let need = (self.trainers * self.samples) as usize;
        if data.len() < need {
            bail!(
                "task dataset has {} rows, {} trainers x {} samples needs {need}",
                data.len(),
                self.trainers,
                self.samples
            );
        }
        Ok(data)
    }

    /// Trainer i's training slice (1-based id): consecutive disjoint rows.
    pub fn training_slice(&self, trainer: u32) -> Result<Dataset> {
        let data = self.dataset()?;
        let start = ((trainer - 1) * self.samples) as usize;
        Ok(data.range(start, start + self.samples as usize)?)
    }

    /// Rows no trainer touches, used for accuracy reporting.
    pub fn holdout(&self) -> Result<Dataset> {
        let data = self.dataset()?;
        let start = (self.trainers * self.samples) as usize;
        Ok(data.range(start, data.len())?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trainers == 0 {
            bail!("at least one trainer is required");
        }
        self.training_task()?;
        self.key_profile()?;
        self.dataset()?;
        Ok(())
    }
}
