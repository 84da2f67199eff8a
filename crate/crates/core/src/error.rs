use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A required column is absent from a dataset header.
    #[error("{path}: missing required column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    /// A row carries a value the task schema does not allow.
    #[error("data error in row `{row}`: {message}")]
    Data { row: String, message: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("non-finite value encountered: {0}")]
    Numeric(String),

    #[error("token id {id} out of range for vocabulary of size {vocab_size}")]
    Encoding { id: usize, vocab_size: usize },

    #[error("invalid model state: {0}")]
    State(String),

    #[error("training diverged at epoch {epoch}, batch {batch}: loss is {loss}")]
    Training { epoch: usize, batch: usize, loss: f64 },

    #[error("checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn data(row: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Data {
            row: row.into(),
            message: message.into(),
        }
    }
}
