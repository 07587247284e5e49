use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot decode {path}: {reason}")]
    Decode { path: PathBuf, reason: String },

    #[error("image format: {0}")]
    Format(String),

    #[error("{0}")]
    Invalid(String),

    #[error("dataset cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Tensor(#[from] ganforge_core::TensorError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DataError>;
