//! Crate-wide error type.
//!
//! Every failure carries one of a small set of stable classes so that the
//! CLI can map it to a distinct exit code and a single-line report.

use thiserror::Error;

/// Stable error classes exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Parse,
    Schema,
    Rank,
    Positivity,
    Inference,
    Io,
}

impl ErrorClass {
    /// Process exit code for this class, stable across releases.
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Io => 1,
            ErrorClass::Parse => 2,
            ErrorClass::Schema => 3,
            ErrorClass::Rank => 4,
            ErrorClass::Positivity => 5,
            ErrorClass::Inference => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorClass::Parse => "parse",
            ErrorClass::Schema => "schema",
            ErrorClass::Rank => "rank",
            ErrorClass::Positivity => "positivity",
            ErrorClass::Inference => "inference",
            ErrorClass::Io => "io",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input text (bad number, wrong field count, ...).
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    /// Structurally valid input that violates the data contract
    /// (missing variable, unbalanced panel, domain violation in a transform).
    #[error("schema error: {0}")]
    Schema(String),

    /// Within-demeaned regressors are rank deficient.
    #[error("rank deficiency: no independent within-unit variation in column(s) {columns:?}")]
    RankDeficient { columns: Vec<String> },

    /// Fitted scale is not strictly positive everywhere.
    #[error(
        "scale positivity violated: {count} of {total} cells have fitted scale <= 0 (min {min:e})"
    )]
    ScalePositivity { count: usize, total: usize, min: f64 },

    /// Bootstrap produced too few usable replicates.
    #[error("inference unreliable: {0}")]
    Inference(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Parse { .. } => ErrorClass::Parse,
            Error::Schema(_) => ErrorClass::Schema,
            Error::RankDeficient { .. } => ErrorClass::Rank,
            Error::ScalePositivity { .. } => ErrorClass::Positivity,
            Error::Inference(_) => ErrorClass::Inference,
            Error::Io(_) => ErrorClass::Io,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse { location: location.into(), message: message.into() }
    }

    pub(crate) fn schema(message: impl Into<String>) -> Self {
        Error::Schema(message.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
