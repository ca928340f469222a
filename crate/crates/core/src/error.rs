use thiserror::Error;

/// Errors raised by the simulator, the protocol runner and the harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("subsystem index {index} out of range for {count} subsystems")]
    InvalidSubsystem { index: usize, count: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("columns are not orthonormal (deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("beta must lie in (0, 1], got {0}")]
    BetaOutOfRange(f64),

    #[error("invalid bit value {0}")]
    InvalidBit(u8),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("missing observation for index {0}")]
    MissingObservation(usize),

    #[error("insufficient pool: needed {needed}, e=1 pool {ones}, e=0 pool {zeros}")]
    InsufficientPool {
        needed: usize,
        ones: usize,
        zeros: usize,
    },

    #[error("set size {m} exceeds the convolution bound {bound}")]
    SetSizeTooLarge { m: usize, bound: usize },

    #[error("trial {trial} exhausted {retries} retries")]
    RetriesExhausted { trial: u64, retries: u32 },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
