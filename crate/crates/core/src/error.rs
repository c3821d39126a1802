use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum SfmError {
    #[error("mask length {got} does not match ground set size {expected}")]
    MaskLength { expected: usize, got: usize },

    #[error("kept and contracted sets overlap")]
    OverlappingMasks,

    #[error("ground set of size {n} exceeds the exhaustive-enumeration cap of {cap}")]
    CapExceeded { n: usize, cap: usize },

    #[error("vector is not in the base polytope: {0}")]
    Infeasible(String),

    #[error("invalid block: {0}")]
    InvalidBlock(String),

    #[error("search interval does not bracket the solution: {0}")]
    Bracketing(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{method} needs {what}")]
    Unsupported { method: &'static str, what: String },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("malformed PGM: {0}")]
    Pgm(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SfmError>;
