use std::path::PathBuf;

use crate::model::Model;

/// Errors raised by the tensor kernel, the decomposers and cube I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid mode {mode} for a tensor of order {order} (modes are 0-based)")]
    InvalidMode { mode: usize, order: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("relative error is undefined for a zero-norm reference tensor")]
    UndefinedReference,

    #[error("invalid model: {0}")]
    Model(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported tensor order {order}: {context}")]
    UnsupportedOrder { order: usize, context: &'static str },

    /// Non-finite values appeared during an iterative solve. `last_valid`
    /// holds the last iterate whose entries were all finite, if any.
    #[error("numerical failure in {stage} at iteration {iteration}: non-finite values")]
    NumericalFailure {
        stage: &'static str,
        iteration: usize,
        last_valid: Option<Box<Model>>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("size mismatch: expected {expected} bytes, found {actual}")]
    SizeMismatch { expected: u64, actual: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
