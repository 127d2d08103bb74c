//! Command-line driver for the zkfl round: publisher setup, per-trainer
//! training and proving, round verification with on-ledger aggregation, and
//! independent log audit. The stages are plain functions so the binary and
//! the integration tests share one code path.

pub mod config;
pub mod metrics;
pub mod pipeline;
