use std::path::PathBuf;

use thiserror::Error;

/// Failure modes of the library.
///
/// The variants are grouped by the exit-code classes the CLI reports:
/// argument errors, numerical failures and I/O problems.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} is rank deficient: {detail}")]
    RankDeficient { what: &'static str, detail: String },

    #[error("matrix is not symmetric positive definite ({0})")]
    NotPositiveDefinite(&'static str),

    #[error("perturbation epsilon {epsilon:e} too large: must stay below {limit:e} to keep N positive definite")]
    PerturbationTooLarge { epsilon: f64, limit: f64 },

    #[error("inconsistent factors: {0}")]
    Contract(String),

    #[error("requested {requested} eigenpairs but only {available} positive eigenvalues are available")]
    Selection { requested: usize, available: usize },

    #[error("degenerate vector while recovering a component: {0}")]
    DegenerateVector(&'static str),

    #[error("spectrum anomaly: expected {expected} positive eigenvalues, found {found} ({detail})")]
    SpectrumAnomaly {
        expected: usize,
        found: usize,
        detail: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    MatrixMarket(#[from] crate::problems::mtx::MtxError),

    #[error("serialization failed: {0}")]
    Serialization(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than numerics.
    pub fn is_argument_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::PerturbationTooLarge { .. }
                | Error::Io { .. }
                | Error::MatrixMarket(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
