use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use zkfl_cli::config::RunConfig;
use zkfl_cli::pipeline;

#[derive(Parser)]
#[command(
    name = "zkfl",
    version,
    about = "Verifiable federated learning rounds: piecewise proofs over quantized \
             training, masked homomorphic aggregation, and a replayable contract log"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Publisher: build the circuit, sample CRS and Paillier keys, simulate
    /// the mask exchange, and write the config snapshot
    Setup {
        /// Experiment parameters; defaults to the desk classifier round
        #[arg(long)]
        config: Option<PathBuf>,
        /// Artifact directory
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Master seed override; wins over the config file
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Trainer: train on this trainer's slice, prove every piece, and write
    /// bundles plus the masked submission
    TrainProve {
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// 1-based trainer id on the aggregation ring
        #[arg(long)]
        trainer: u32,
    },
    /// Publisher: verify every trainer's chain, run the contract round,
    /// decrypt and publish the aggregate, and write the metrics report
    VerifyAggregate {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Full round in one process: setup, every trainer, verify-aggregate
    E2e {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Replay the saved ledger from genesis and cross-check the published
    /// result against the global model artifact
    Audit {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn resolve_config(path: Option<PathBuf>, seed: Option<u64>) -> Result<RunConfig> {
    let mut config = match path {
        Some(p) => RunConfig::load(&p)?,
        None => RunConfig::default(),
    };
    if seed.is_some() {
        config.seed = seed;
    }
    Ok(config)
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Setup { config, out, seed } => {
            pipeline::cmd_setup(&resolve_config(config, seed)?, &out)?;
        }
        Command::TrainProve { out, trainer } => {
            pipeline::cmd_train_prove(&out, trainer)?;
        }
        Command::VerifyAggregate { out } => {
            pipeline::cmd_verify_aggregate(&out)?;
        }
        Command::E2e { config, out, seed } => {
            pipeline::cmd_e2e(&resolve_config(config, seed)?, &out)?;
        }
        Command::Audit { out } => {
            pipeline::cmd_audit(&out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
