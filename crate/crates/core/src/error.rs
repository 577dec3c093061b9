use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("alist line {line}: {msg}")]
    Alist { line: usize, msg: String },

    #[error("invalid parity-check matrix: {0}")]
    InvalidMatrix(String),

    #[error("{what} length mismatch: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical divergence at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("non-finite gradient at parameter {index}; step rejected")]
    NonFiniteGradient { index: usize },

    #[error("training diverged at step {step}: loss is not finite")]
    TrainingDiverged { step: usize },

    #[error("weight file: {0}")]
    Weights(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
