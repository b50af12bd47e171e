use thiserror::Error;

/// Errors produced by instance validation, parsing, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("insufficient pivots")]
    InsufficientPivots,

    #[error("invalid pivot sequence: {0}")]
    InvalidPivotSequence(String),

    #[error("exact search limited to n <= {max}, got n = {n}")]
    ExactSearchSize { n: usize, max: usize },

    #[error("brute force limited to n <= {max}, got n = {n}")]
    BruteForceSize { n: usize, max: usize },

    #[error("LP size bound exceeded (n = {n}, levels = {levels}); enable force to override")]
    LpSizeBound { n: usize, levels: usize },

    #[error("region-growing guarantee violated")]
    RegionGrowing,

    #[error("internal solver error: {0}")]
    Solver(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, Error>;
