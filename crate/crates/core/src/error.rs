use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty file: no observations")]
    EmptyData,

    #[error("bad header: {0}")]
    Header(String),

    #[error("row {row}: malformed {column} cell {value:?}")]
    MalformedCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}: time out of range ({time} not in 1..={max})")]
    TimeOutOfRange { row: usize, time: i64, max: usize },

    #[error("row {row}: status {status} out of range for m = {m}")]
    StatusOutOfRange { row: usize, status: i64, m: usize },

    #[error("row {row}: expected {expected} cells, found {found}")]
    RowLength {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite linear predictor")]
    NonFinite,

    #[error("invalid probability: {0}")]
    Probability(String),

    #[error("invalid hyperparameters: {0}")]
    Hyperparameters(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("no posterior samples")]
    EmptySamples,

    #[error("sample file: {0}")]
    SampleFormat(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the input data rather than the run itself.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::EmptyData
                | Error::Header(_)
                | Error::MalformedCell { .. }
                | Error::TimeOutOfRange { .. }
                | Error::StatusOutOfRange { .. }
                | Error::RowLength { .. }
                | Error::Csv(_)
                | Error::EmptySamples
                | Error::SampleFormat(_)
        )
    }
}
