use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid missingness spec: {0}")]
    Spec(String),

    #[error("feature `{0}` has no observed values")]
    EmptyFeature(String),

    #[error("cell (s={group}, y={label}) {problem}")]
    Cell { group: u32, label: u8, problem: String },

    #[error("imputer used before fit")]
    NotFitted,

    #[error("training data contains a single label")]
    SingleLabel,

    #[error("training data is empty")]
    EmptyData,

    #[error("non-finite value in encoded features at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("at least two sensitive groups are required, found {0}")]
    TooFewGroups(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("{0}")]
    Experiment(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn cell(group: u32, label: u8, problem: impl Into<String>) -> Self {
        Error::Cell { group, label, problem: problem.into() }
    }
}
