use thiserror::Error;

#[derive(Debug, Error)]
pub enum GanError {
    #[error("{0}")]
    Invalid(String),

    #[error("training aborted at epoch {epoch}, iteration {iteration}: {reason}")]
    Training { epoch: usize, iteration: usize, reason: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Tensor(#[from] ganforge_core::TensorError),

    #[error(transparent)]
    Data(#[from] ganforge_data::DataError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GanError>;
