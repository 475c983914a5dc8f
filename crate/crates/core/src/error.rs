use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid band edges [{low}, {high}]: {reason}")]
    BandEdge { low: f64, high: f64, reason: &'static str },

    #[error("insufficient data: {what} has {got} samples, need at least {need}")]
    InsufficientData { what: &'static str, got: usize, need: usize },

    #[error("band [{low}, {high}] Hz contains no frequency bins")]
    EmptyBand { low: f64, high: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("{path}, line {line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("replication {index} (seed {seed:#018x}) failed: {source}")]
    Replication {
        index: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code for this error: 2 for configuration problems, 3 for
    /// bad input data, 4 for internal invariant failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Schema { .. } | Error::BandEdge { .. } | Error::InvalidArgument(_) => 2,
            Error::InsufficientData { .. } | Error::EmptyBand { .. } | Error::Parse { .. } | Error::Io { .. } => 3,
            Error::Replication { source, .. } => source.exit_code(),
            Error::Invariant(_) => 4,
        }
    }
}
