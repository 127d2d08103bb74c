//! Verifiable federated learning over a quantized training circuit.
//!
//! Each trainer runs gradient-descent steps as fixed-point arithmetic inside
//! a rank-1 constraint system, proves every circuit piece with a Groth16
//! proof whose public statement is masked by per-piece noise, chains the
//! pieces with sigma protocols so the noise telescopes across the chain, and
//! submits its local model through a masked secure sum whose result a
//! simulated contract ledger verifies and publishes.

pub mod algebra;
pub mod encode;
pub mod error;
pub mod groth16;
pub mod par;
pub mod poly;
pub mod aggregation;
pub mod ledger;
pub mod paillier;
pub mod piecechain;
pub mod quantize;
pub mod r1cs;
pub mod sigma;
pub mod trainer;

pub use error::{Error, Result};
