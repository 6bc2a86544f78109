use std::path::PathBuf;

use thiserror::Error;

use crate::model::{ConvergenceTrace, Coords};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Input data violates symmetry, non-negativity or shape requirements.
    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("degenerate bundle: every data matrix is zero")]
    DegenerateBundle,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("factorization is in {found:?} coordinates, expected {expected:?}")]
    Coords { expected: Coords, found: Coords },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    /// The objective or a gradient became NaN/inf. The trace up to the failure
    /// is kept for diagnostics.
    #[error("non-finite value at iteration {iteration}")]
    NonFinite {
        iteration: usize,
        trace: Box<ConvergenceTrace>,
    },

    #[error("memory guard: line-search intermediates need {required} bytes, budget is {budget} bytes")]
    MemoryBudget { required: u64, budget: u64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {msg}", path.display())]
    Parse { path: PathBuf, msg: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            msg: msg.into(),
        }
    }
}
