//! The machine-readable report a finished round leaves behind: timings,
//! artifact sizes, and counts, each cross-checked against what is actually
//! on disk before being written.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub task: String,
    pub trainers: u32,
    pub pieces_per_trainer: u32,
    /// Total piece proofs across all trainers.
    pub proof_count: u32,
    pub constraint_count: u32,
    pub statement_len: u32,
    pub setup_seconds: f64,
    pub prove_seconds_per_proof: f64,
    pub verify_seconds_per_proof: f64,
    pub proving_key_bytes: u64,
    pub verification_key_bytes: u64,
    /// One serialized proof (three group points).
    pub proof_bytes: u64,
    /// Held-out accuracy of the aggregated model; absent for regression.
    pub accuracy: Option<f64>,
}

impl MetricsReport {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).context("serializing metrics")?;
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading metrics {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Wall-clock stamps written by the setup and proving stages; kept separate
/// from the deterministic artifacts so identical seeds still produce
/// identical manifest/key/model bytes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageTiming {
    pub seconds: f64,
    /// Work items the stage processed (proofs for proving, 1 for setup).
    pub items: u32,
}

impl StageTiming {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).context("serializing timing")?;
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading timing {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }
}
