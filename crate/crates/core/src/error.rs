use std::path::PathBuf;

use thiserror::Error;

/// Coarse failure class, used by the command line to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input data, flags or files.
    Input,
    /// An estimator or solver could not produce a value.
    Numeric,
    /// Datasets that must be row-aligned are not.
    Pairing,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid shape: {0}")]
    Shape(String),

    #[error("row count mismatch: {left} has {left_rows} rows, {right} has {right_rows}")]
    RowMismatch {
        left: String,
        left_rows: usize,
        right: String,
        right_rows: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("need at least {needed} points, only {available} available")]
    TooFewPoints { needed: usize, available: usize },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("{stage}: {source}")]
    Context {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header in {path}: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("non-numeric cell {value:?} at row {row}, column {col}")]
    NonNumeric {
        row: usize,
        col: usize,
        value: String,
    },

    #[error("unsupported format: {0}")]
    Unsupported(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn context(self, stage: impl Into<String>) -> Self {
        Error::Context {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Context { source, .. } => source.class(),
            Error::RowMismatch { .. } => ErrorClass::Pairing,
            Error::TooFewPoints { .. } | Error::Degenerate(_) => ErrorClass::Numeric,
            _ => ErrorClass::Input,
        }
    }

    /// Stable short identifier for the failure, one per variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NonFinite { .. } => "non_finite",
            Error::Shape(_) => "shape",
            Error::RowMismatch { .. } => "row_mismatch",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::TooFewPoints { .. } => "too_few_points",
            Error::Degenerate(_) => "degenerate",
            Error::Context { source, .. } => source.code(),
            Error::Io { .. } => "io",
            Error::MalformedHeader { .. } => "malformed_header",
            Error::NonNumeric { .. } => "non_numeric",
            Error::Unsupported(_) => "unsupported",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
