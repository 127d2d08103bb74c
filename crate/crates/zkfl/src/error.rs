//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid point encoding")]
    InvalidPoint,
    #[error("invalid scalar encoding")]
    InvalidScalar,
    #[error("value does not fit the signed decoding range")]
    SignedDecode,
    #[error("truncated input: needed {needed} more bytes")]
    Truncated { needed: usize },
    #[error("trailing bytes after decoding")]
    TrailingBytes,
    #[error("bad file frame: {0}")]
    BadFrame(&'static str),
    #[error("unsupported format version {0}")]
    BadVersion(u16),
    #[error("circuit hash mismatch between artifact and key material")]
    CircuitHashMismatch,
    #[error("constraint {index} unsatisfied")]
    Unsatisfied { index: usize },
    #[error("degenerate circuit: {0}")]
    DegenerateCircuit(&'static str),
    #[error("empty expression list")]
    EmptyProgram,
    #[error("statement slot count must be even and positive, got {0}")]
    BadStatementLayout(usize),
    #[error("expression references undefined symbol {0}")]
    UndefinedSymbol(usize),
    #[error("fixed-point overflow in {context}")]
    Overflow { context: &'static str },
    #[error("division by a non-positive denominator in {context}")]
    NonPositiveDenominator { context: &'static str },
    #[error("value outside validated domain: {0}")]
    OutOfDomain(String),
    #[error("taylor selection exceeded the order ceiling {0}")]
    OrderCeiling(u32),
    #[error("prime generation failed")]
    PrimeGeneration,
    #[error("invalid Paillier parameters: {0}")]
    BadPaillierParams(&'static str),
    #[error("plaintext outside the encryptable range")]
    PlaintextRange,
    #[error("ciphertext not valid for this key")]
    ModulusMismatch,
    #[error("paillier capacity exceeded: {0}")]
    Capacity(String),
    #[error("aggregation round incomplete: have {have} of {want} submissions")]
    IncompleteRound { have: usize, want: usize },
    #[error("ledger: unknown contract address")]
    UnknownAddress,
    #[error("ledger: duplicate contract address")]
    DuplicateAddress,
    #[error("ledger: duplicate submission from trainer {0}")]
    DuplicateSubmission(u32),
    #[error("ledger: round already closed")]
    RoundClosed,
    #[error("ledger: {0}")]
    Ledger(&'static str),
    #[error("empty piece chain")]
    EmptyChain,
    #[error("piece {index} failed verification: {reason}")]
    PieceRejected { index: u32, reason: &'static str },
    #[error("training diverged: parameter left the representable range")]
    Divergence,
    #[error("invalid task configuration: {0}")]
    BadTask(String),
    #[error("dataset error: {0}")]
    Dataset(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
