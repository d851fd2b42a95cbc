use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("confusion matrix is singular or ill-conditioned (reciprocal condition {rcond:e})")]
    SingularConfusion { rcond: f64 },

    #[error("invalid confusion matrix: {0}")]
    InvalidConfusion(String),

    #[error("row {row} is all zeros after clamping negative entries")]
    DegenerateRow { row: usize },

    #[error("no reference matrix passed the invertibility check after {attempts} draws")]
    ReferenceSampling { attempts: usize },

    #[error("kernel matrix has no eigenvalue above {tolerance:e}")]
    DegenerateKernel { tolerance: f64 },

    #[error("class {class} does not occur in the ground truth")]
    MissingClass { class: usize },

    #[error("class {class} has {available} examples, {requested} requested")]
    InsufficientClass { class: usize, available: usize, requested: usize },

    #[error("synthetic generation failed: {0}")]
    Generation(String),

    #[error("{}:{line}: {message}", path.display())]
    Ingestion { path: PathBuf, line: usize, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Numerical failures map to exit code 2, everything else to 1.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularConfusion { .. }
                | Error::DegenerateRow { .. }
                | Error::ReferenceSampling { .. }
                | Error::DegenerateKernel { .. }
        )
    }

    pub(crate) fn ingestion(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Ingestion { path: path.into(), line, message: message.into() }
    }
}
