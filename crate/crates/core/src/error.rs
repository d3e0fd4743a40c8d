use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    /// The 2×2 Gram matrix of the cos/sin design is numerically singular.
    #[error("degenerate design at ({0}, {1})")]
    DegenerateDesign(f64, f64),

    #[error("every lattice point has a degenerate design")]
    AllGridDegenerate,

    #[error("lattice of {required} evaluations exceeds the budget of {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("{failed} of {total} replications failed")]
    TooManyFailures { failed: usize, total: usize },

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
