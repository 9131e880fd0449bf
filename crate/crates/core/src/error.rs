use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{primitive}: shape mismatch between {left:?} and {right:?}")]
    ShapeMismatch {
        primitive: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("tensor shape {shape:?} needs {expected} values, got {actual}")]
    BadTensor {
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },

    #[error("{primitive}: non-finite value produced")]
    NonFinite { primitive: &'static str },

    #[error("backward: loss must be a scalar, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),

    #[error("backward: tape already consumed")]
    TapeConsumed,

    #[error("backward: {0}")]
    BadTape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("optimizer state: {0}")]
    State(String),

    #[error("oracle contract violated: {0}")]
    OracleContract(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("dataset: {0}")]
    Dataset(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
