use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by omnikit operations.
///
/// Matrix indices carried in variants are 1-based, matching the file formats
/// and reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("asymmetric matrix at ({i}, {j}): {upper} vs {lower}")]
    Asymmetric {
        i: usize,
        j: usize,
        upper: f64,
        lower: f64,
    },

    #[error("non-finite entry at ({i}, {j})")]
    NonFinite { i: usize, j: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("empty result: {0}")]
    Empty(String),

    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPositiveSemidefinite(f64),

    #[error("singular KKT system")]
    SingularKkt,

    #[error("quadratic program is infeasible (phase-1 residual {0:e})")]
    Infeasible(f64),

    #[error("Cholesky factorization failed for every ridge in the schedule {0:?}")]
    RidgeScheduleExhausted(Vec<f64>),

    #[error("invalid Omnibus weights: {0}")]
    InvalidWeights(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
