use std::path::PathBuf;

/// Errors raised across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid shape {dims:?}: {reason}")]
    InvalidShape { dims: Vec<usize>, reason: &'static str },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("input {height}x{width} is too small: need at least {min} in both spatial dims")]
    TooSmall { height: usize, width: usize, min: usize },

    #[error("row vector of length {len} is too short: need at least {min}")]
    RowTooShort { len: usize, min: usize },

    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),

    #[error("backward called without a cached training-mode forward pass")]
    MissingCache,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("format error in {what}: {reason}")]
    Format { what: &'static str, reason: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn format(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Format { what, reason: reason.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
