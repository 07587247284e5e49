use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("{0}")]
    Invalid(String),

    #[error("optimization diverged at iteration {iteration}: {reason}")]
    Diverged { iteration: usize, reason: String },

    #[error("layout format: {0}")]
    Format(String),

    #[error(transparent)]
    Tensor(#[from] ganforge_core::TensorError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, EmbedError>;
