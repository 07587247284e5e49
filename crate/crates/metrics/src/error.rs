use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("{0}")]
    Invalid(String),

    #[error("metric input: {0}")]
    Validation(String),

    #[error("extractor {0} requires a trained classifier")]
    ExtractorUntrained(String),

    #[error("real/fake scoring requires a vanilla discriminator, got a {0} critic")]
    CriticMode(String),

    #[error(transparent)]
    Tensor(#[from] ganforge_core::TensorError),

    #[error(transparent)]
    Gan(#[from] ganforge_gan::GanError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MetricError>;
