use thiserror::Error;

/// Errors raised by the library. Indices in messages are 1-based.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("matrix is not symmetric at ({row}, {col})")]
    Asymmetric { row: usize, col: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is numerically singular (reciprocal condition {rcond:e})")]
    Singular { rcond: f64 },

    #[error("block embedding is inconsistent at ({row}, {col}) and its mirror")]
    InconsistentEmbedding { row: usize, col: usize },

    #[error("invalid conditional independence statement: {0}")]
    InvalidStatement(String),

    #[error("invalid graphical model: {0}")]
    Model(String),

    #[error("variation factor at ({row}, {col}) is zero; this would force an independence")]
    ZeroFactor { row: usize, col: usize },

    #[error("position ({row}, {col}) is varied more than once")]
    DuplicatePosition { row: usize, col: usize },

    #[error("covariation scheme is invalid: {0}")]
    SchemeInvalid(String),

    #[error("perturbed covariance is not admissible: {0}")]
    Inadmissible(String),

    #[error("input covariance is not in the model: {0}")]
    NotInModel(String),

    #[error("model file error at {field}: {message}")]
    Format { field: String, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
