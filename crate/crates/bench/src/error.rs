use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] dsa_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Records { path: PathBuf, message: String },

    #[error("run {run_id} diverged at iteration {iter}: {cause}")]
    Diverged {
        run_id: String,
        iter: u64,
        cause: String,
    },

    #[error("{0}")]
    Fetch(String),
}

impl BenchError {
    /// Stable identifier printed in the one-line error report.
    pub fn kind(&self) -> &'static str {
        match self {
            BenchError::Config(_) => "config",
            BenchError::Core(dsa_core::Error::Dataset(_) | dsa_core::Error::Parse { .. }) => "dataset",
            BenchError::Core(dsa_core::Error::Io { .. }) => "io",
            BenchError::Core(dsa_core::Error::InvalidArgument(_)) => "config",
            BenchError::Core(_) => "numeric",
            BenchError::Io { .. } => "io",
            BenchError::Records { .. } => "records",
            BenchError::Diverged { .. } => "diverged",
            BenchError::Fetch(_) => "fetch",
        }
    }

    /// `error kind=<kind> msg="<message>"` on one line.
    pub fn report_line(&self) -> String {
        let msg = self.to_string().replace(['\n', '\r'], " ").replace('"', "'");
        format!("error kind={} msg=\"{msg}\"", self.kind())
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| BenchError::Io { path, source }
    }
}

pub(crate) fn config(msg: impl Into<String>) -> BenchError {
    BenchError::Config(msg.into())
}
