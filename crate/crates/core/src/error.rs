use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: count mismatch: header declares {declared} samples, found {found}")]
    CountMismatch {
        path: String,
        declared: usize,
        found: usize,
    },
    #[error("{path}: line {line}: invalid button state {value}")]
    InvalidButton {
        path: String,
        line: usize,
        value: i64,
    },
    #[error("{path}: line {line}: timestamp {value} is not strictly increasing")]
    NonIncreasingTimestamp {
        path: String,
        line: usize,
        value: i64,
    },
    #[error("invalid trial: {0}")]
    InvalidTrial(String),
    #[error("duplicate trial for subject {subject_id}, task {task_id}")]
    DuplicateTrial { subject_id: String, task_id: u8 },
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("phase {phase} has {available} differences, {kind} needs {required}")]
    PhaseTooShort {
        phase: &'static str,
        kind: &'static str,
        available: usize,
        required: usize,
    },
    #[error("series too short: {what} needs at least {required} values, got {got}")]
    TooShort {
        what: &'static str,
        required: usize,
        got: usize,
    },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("training data contains a single class")]
    SingleClass,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("column mismatch: {0}")]
    ColumnMismatch(String),
    #[error("SMO did not converge within {0} iterations")]
    NotConverged(usize),
    #[error("hyperparameter trial {trial} failed: {source}")]
    SearchTrial {
        trial: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("subject {0} missing from ensemble member")]
    MissingSubject(String),
    #[error("fold {fold}: {message}")]
    Fold { fold: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Whether the error stems from invalid user input rather than an
    /// internal failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::NotConverged(_) | Error::Io(_))
    }

    pub(crate) fn parse(path: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_string(),
            line,
            message: message.into(),
        }
    }
}
