use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error at row {row}, column {column}: cannot read {value:?} as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("missing value at row {row}, column {column}")]
    MissingValue { row: usize, column: String },

    #[error("label error at row {row}: {value:?} is not -1 or +1")]
    Label { row: usize, value: String },

    #[error("label balance error: {0}")]
    LabelBalance(String),

    #[error("no data rows")]
    NoData,

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("enumeration of {subsets} subsets exceeds the cap of {cap}; use the branch-and-bound solver")]
    EnumerationCap { subsets: u128, cap: u128 },

    #[error("svm did not converge after {iterations} iterations (dual objective {dual_objective})")]
    NotConverged { iterations: usize, dual_objective: f64 },

    #[error("unsupported format {0:?}")]
    UnsupportedFormat(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag, used by the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
            Error::Parse { .. } => "parse",
            Error::MissingValue { .. } => "missing_value",
            Error::Label { .. } => "label",
            Error::LabelBalance(_) => "label_balance",
            Error::NoData => "no_data",
            Error::Invalid(_) => "invalid",
            Error::Dimension(_) => "dimension",
            Error::EnumerationCap { .. } => "enumeration_cap",
            Error::NotConverged { .. } => "not_converged",
            Error::UnsupportedFormat(_) => "unsupported_format",
        }
    }
}
