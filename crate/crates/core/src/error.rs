use thiserror::Error;

/// Errors raised by the correlation-geometry engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },
    #[error("invalid arguments: {0}")]
    InvalidArgs(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("undersampled: {points} points cannot resolve wave number {k_max}")]
    Undersampled { points: usize, k_max: usize },
    #[error("field `{field}` has no jet but the requested construction needs derivatives")]
    MissingJet { field: String },
    #[error("model is missing required descriptor: {0}")]
    MissingDescriptor(String),
    #[error("reference system spans no nonzero vector (Gram rank 0)")]
    DegenerateSystem,
    #[error("epsilon ball around point {point} is empty")]
    EmptyBall { point: usize },
    #[error("sea cut between eigenvalues {below:.6e} and {above:.6e} falls inside a degenerate level")]
    AmbiguousSeaCut { below: f64, above: f64 },
    #[error("invalid diffeomorphism: {0}")]
    InvalidDiffeo(String),
    #[error("invalid embedding: target dimension {target} < source dimension {source_dim}")]
    InvalidEmbedding { source_dim: usize, target: usize },
    #[error("local form is not covariant under pointwise phase changes: {0}")]
    FormNotCovariant(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
