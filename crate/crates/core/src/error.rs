use std::io;
use std::path::PathBuf;

/// Errors produced anywhere in the decoding pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not positive definite even after ridge conditioning")]
    NotPositiveDefinite,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("zero variance in channel {channel}")]
    ZeroVariance { channel: usize },

    #[error("did not converge: {0}")]
    NoConvergence(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("manifest {}: {msg}", path.display())]
    Manifest { path: PathBuf, msg: String },

    #[error("data: {0}")]
    Data(String),

    #[error("config: {0}")]
    Config(String),
}

/// Coarse classification used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => ErrorKind::Config,
            Error::Io { .. } | Error::Manifest { .. } | Error::Data(_) | Error::Shape(_) => {
                ErrorKind::Data
            }
            Error::ZeroVariance { .. } => ErrorKind::Data,
            Error::NotPositiveDefinite | Error::Degenerate(_) | Error::NoConvergence(_) => {
                ErrorKind::Numeric
            }
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
