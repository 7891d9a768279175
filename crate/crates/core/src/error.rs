use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("duplicate interaction ({user}, {item}) on lines {first} and {second}")]
    DuplicateInteraction {
        user: String,
        item: String,
        first: usize,
        second: usize,
    },
    #[error("dataset is empty after filtering")]
    EmptyDataset,
    #[error("infeasible split: {0}")]
    InfeasibleSplit(String),
    #[error("feature dimension {0} is constant over the training items")]
    ConstantFeature(usize),
    #[error("missing features for item `{0}`")]
    MissingFeatures(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("unsupported setting: {0}")]
    Unsupported(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Whether this error reports a diverged optimization (non-finite loss or gradient).
    pub fn is_divergence(&self) -> bool {
        matches!(self, Error::NonFinite(_))
    }

    /// Whether this error stems from input data rather than configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::DuplicateInteraction { .. }
                | Error::EmptyDataset
                | Error::ConstantFeature(_)
                | Error::MissingFeatures(_)
                | Error::Io(_)
                | Error::Checkpoint(_)
        )
    }
}
