use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value for `{0}`")]
    NonFinite(&'static str),

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("unknown action {action} (loss table has {available} actions)")]
    UnknownAction { action: usize, available: usize },

    #[error("forecast interval ({lo}, {hi}) is not inside (0, 1)")]
    DegenerateInterval { lo: f64, hi: f64 },

    #[error("protocol order violated: {0}")]
    ProtocolOrder(String),

    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("quote unavailable: mu + c = {0} >= 1")]
    Unquotable(f64),

    #[error("csv line {line}: {reason}")]
    Csv { line: u64, reason: String },

    #[error("stream exhausted")]
    Exhausted,

    #[error("snapshot: {0}")]
    Snapshot(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn finite(name: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(name))
    }
}
