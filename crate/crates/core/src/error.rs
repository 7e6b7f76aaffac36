use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("bisection failed: {0}")]
    BisectFailed(String),

    #[error("invalid landscape: {0}")]
    InvalidLandscape(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("grid error: {0}")]
    Grid(String),

    #[error("parcel {parcel} cannot be sampled from grid {grid}: {reason}")]
    Sample {
        parcel: String,
        grid: String,
        reason: String,
    },

    #[error("cells without reference overlap: {0:?}")]
    Unlabelable(Vec<String>),

    #[error("training error: {0}")]
    Training(String),

    #[error("feature dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("no candidate with positive weight")]
    NoCandidate,

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("unsupported format version {found} (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input rather than a failure while running.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Io { source, .. } => source.kind() == std::io::ErrorKind::NotFound,
            Error::BisectFailed(_) | Error::Training(_) | Error::NoCandidate => false,
            _ => true,
        }
    }
}
