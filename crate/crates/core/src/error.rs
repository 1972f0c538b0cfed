use thiserror::Error;

/// Errors produced anywhere in the clustering pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("covariance of blob component {component} is not symmetric positive semidefinite")]
    NotPositiveSemidefinite { component: usize },

    #[error("row {row}: {reason}")]
    Parse { row: usize, reason: String },

    #[error("{requested} qubits exceed the limit of {limit}; {hint}")]
    TooManyQubits {
        requested: usize,
        limit: usize,
        hint: &'static str,
    },

    #[error(
        "total scatter matrix is numerically singular (condition number {condition:e}); \
         increase the regularization"
    )]
    SingularScatter { condition: f64 },

    #[error("degenerate clustering: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
