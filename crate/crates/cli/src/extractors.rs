//! Extractor selection shared by `evaluate` and `embed`.

use std::path::PathBuf;

use ganforge_core::derive_seed;
use ganforge_harness::classifier::load_classifier;
use ganforge_harness::Classifier;
use ganforge_metrics::{FeatureExtractor, RandomProjection, RawPixels};

use crate::errors::{CliError, Result};

pub enum ExtractorChoice {
    /// Penultimate features of a trained classifier; also supplies class
    /// posteriors for the score metric.
    Classifier(Box<Classifier>),
    RawPixels,
    RandomProjection { dim: usize },
}

/// Accepted forms: `classifier:PATH`, `classifier` (errors: needs a
/// trained model), `raw-pixels`, `rp:D`.
pub fn parse_extractor(spec: &str) -> Result<ExtractorChoice> {
    if spec == "raw-pixels" {
        return Ok(ExtractorChoice::RawPixels);
    }
    if let Some(dim) = spec.strip_prefix("rp:") {
        let dim: usize = dim
            .parse()
            .map_err(|_| CliError::validation(format!("bad projection dimension in {spec:?}")))?;
        if dim == 0 {
            return Err(CliError::validation("projection dimension must be positive"));
        }
        return Ok(ExtractorChoice::RandomProjection { dim });
    }
    if spec == "classifier" {
        return Err(CliError::missing(
            "extractor 'classifier' requires a trained model: use classifier:PATH (or rp:D / raw-pixels)",
        ));
    }
    if let Some(path) = spec.strip_prefix("classifier:") {
        let cls = load_classifier(&PathBuf::from(path))
            .map_err(|e| CliError::missing(format!("classifier checkpoint {path}: {e}")))?;
        return Ok(ExtractorChoice::Classifier(Box::new(cls)));
    }
    Err(CliError::validation(format!(
        "unknown extractor {spec:?}; expected classifier:PATH, raw-pixels, or rp:D"
    )))
}

impl ExtractorChoice {
    pub fn as_extractor(&self, seed: u64) -> Box<dyn FeatureExtractor + '_> {
        match self {
            ExtractorChoice::Classifier(c) => Box::new(c.as_ref().clone()),
            ExtractorChoice::RawPixels => Box::new(RawPixels),
            ExtractorChoice::RandomProjection { dim } => {
                Box::new(RandomProjection { dim: *dim, seed: derive_seed(seed, "extractor-rp") })
            }
        }
    }

    pub fn classifier(&self) -> Option<Classifier> {
        match self {
            ExtractorChoice::Classifier(c) => Some(c.as_ref().clone()),
            _ => None,
        }
    }
}
