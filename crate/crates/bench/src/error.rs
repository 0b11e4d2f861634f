use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] hsi_tensor::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("every requested method failed")]
    AllFailed,
}

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        use hsi_tensor::Error as E;
        match self {
            BenchError::Usage(_) => EXIT_USAGE,
            BenchError::Io { .. } => EXIT_IO,
            BenchError::AllFailed => EXIT_NUMERICAL,
            BenchError::Core(e) => match e {
                E::Io { .. } | E::Format(_) | E::SizeMismatch { .. } => EXIT_IO,
                E::NumericalFailure { .. } => EXIT_NUMERICAL,
                _ => EXIT_USAGE,
            },
        }
    }
}

pub(crate) fn write_file(path: &std::path::Path, contents: impl AsRef<[u8]>) -> Result<(), BenchError> {
    std::fs::write(path, contents).map_err(|source| BenchError::Io {
        path: path.to_owned(),
        source,
    })
}
