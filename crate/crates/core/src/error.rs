use thiserror::Error;

/// Errors raised by state construction and the fidelity machinery.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("trace is {trace}, expected 1")]
    InvalidTrace { trace: f64 },

    #[error("vector norm is {norm}, expected 1")]
    NotNormalized { norm: f64 },

    #[error("non-finite entry in input")]
    NonFinite,

    #[error("rank {rank} is invalid for dimension {dim}")]
    InvalidRank { dim: usize, rank: usize },

    #[error("ancilla dimension {ancilla_dim} is smaller than required {required}")]
    AncillaTooSmall { ancilla_dim: usize, required: usize },

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),

    #[error("truncation captures too little mass (alpha = {alpha:e}, beta = {beta:e})")]
    InvalidTruncation { alpha: f64, beta: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no convergence below cap dimension {cap}")]
    NoConvergence { cap: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
