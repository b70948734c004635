use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the fuzzy regression pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate partition for `{variable}`: all samples equal {value}")]
    DegeneratePartition { variable: String, value: f64 },

    #[error("invalid rule: {0}")]
    InvalidRule(String),

    #[error("rule cannot be fitted: {0}")]
    Unfittable(String),

    #[error("rule antecedent has zero support on both bounds")]
    ZeroSupport,

    #[error("rule universe is empty after generation")]
    EmptyUniverse,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("model is not trained: {0}")]
    Untrained(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
