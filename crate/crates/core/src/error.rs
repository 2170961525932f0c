use std::path::PathBuf;

use thiserror::Error;

/// Errors produced while loading data, fitting models or evaluating them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}: file is empty")]
    EmptyFile(PathBuf),
    #[error("row {row}, column {column} ({name}): non-numeric value {value:?}")]
    NonNumeric {
        row: usize,
        column: usize,
        name: String,
        value: String,
    },
    #[error("row {row}, column {column} ({name}): missing value")]
    MissingValue {
        row: usize,
        column: usize,
        name: String,
    },
    #[error("row {row}: expected {expected} columns, found {found}")]
    ColumnCount {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("label column {0:?} not found in header")]
    UnknownLabelColumn(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected} features, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("name mismatch: expected {expected} {what}, got {found}")]
    NameMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("tree text parse error on line {line}: {message}")]
    TreeParse { line: usize, message: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the caller's arguments rather than by input data.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::DimensionMismatch { .. }
                | Error::NameMismatch { .. }
                | Error::UnknownLabelColumn(_)
        )
    }
}
