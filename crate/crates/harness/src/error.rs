use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Invalid(String),

    #[error("synthetic pool too small for class {class}: need {needed}, have {available}")]
    SyntheticShortfall { class: usize, needed: usize, available: usize },

    #[error("quality gate failed after {rounds} rounds: fid {fid}, precision {precision}")]
    GateExhausted { rounds: usize, fid: f64, precision: f64 },

    #[error(transparent)]
    Tensor(#[from] ganforge_core::TensorError),

    #[error(transparent)]
    Data(#[from] ganforge_data::DataError),

    #[error(transparent)]
    Gan(#[from] ganforge_gan::GanError),

    #[error(transparent)]
    Metric(#[from] ganforge_metrics::MetricError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
