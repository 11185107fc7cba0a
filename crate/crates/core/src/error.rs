use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("undersampled: detector side m = {m} is below 4n-1 = {required} for n = {n}")]
    Undersampled { n: usize, m: usize, required: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("entry magnitude {magnitude} at ({row}, {col}) exceeds 1")]
    MagnitudeOutOfRange {
        row: usize,
        col: usize,
        magnitude: f64,
    },

    #[error("negative magnitude datum {value} at ({row}, {col})")]
    NegativeData { row: usize, col: usize, value: f64 },

    #[error("separation condition violated: reference corner R(n-1, n-1) is zero")]
    SeparationViolated,

    #[error("invalid photon budget: {0}")]
    InvalidBudget(String),

    #[error("magnitude data has zero total energy")]
    ZeroEnergy,

    #[error("relative error undefined: truth has zero norm")]
    ZeroTruth,

    #[error("size n = {n} exceeds the limit of {limit} for {what}")]
    TooLarge {
        what: &'static str,
        n: usize,
        limit: usize,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn dims(expected: impl Into<String>, actual: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            expected: expected.into(),
            actual: actual.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Broad class of the failure, used for CLI exit codes and report entries.
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Undersampled { .. }
            | Error::DimensionMismatch { .. }
            | Error::NonFinite { .. }
            | Error::MagnitudeOutOfRange { .. }
            | Error::NegativeData { .. }
            | Error::SeparationViolated
            | Error::InvalidBudget(_)
            | Error::ZeroEnergy
            | Error::ZeroTruth => ErrorCategory::Validation,
            Error::TooLarge { .. } | Error::Unsupported(_) => ErrorCategory::Unsupported,
            Error::Config(_) => ErrorCategory::Config,
            Error::Format { .. } | Error::Json(_) => ErrorCategory::Format,
            Error::Io { .. } => ErrorCategory::Io,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Validation,
    Unsupported,
    Config,
    Format,
    Io,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Validation => "validation",
            ErrorCategory::Unsupported => "unsupported",
            ErrorCategory::Config => "config",
            ErrorCategory::Format => "format",
            ErrorCategory::Io => "io",
        }
    }
}
