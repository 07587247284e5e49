//! Feature extraction for metric computation.
//!
//! Raw-pixel and random-projection extractors need no trained model, so
//! every metric is testable standalone; the downstream classifier's
//! penultimate layer plugs in through the same trait.

use ganforge_core::{Rng, Tensor};

use crate::error::{MetricError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Real,
    Synthetic,
}

/// `N x D` feature matrix with provenance.
#[derive(Clone, Debug)]
pub struct FeatureSet {
    pub features: Tensor,
    pub extractor_id: String,
    pub source: Source,
}

impl FeatureSet {
    pub fn new(features: Tensor, extractor_id: impl Into<String>, source: Source) -> Result<Self> {
        features.dims2().map_err(MetricError::Tensor)?;
        features.validate_finite("feature matrix").map_err(MetricError::Tensor)?;
        Ok(FeatureSet { features, extractor_id: extractor_id.into(), source })
    }

    pub fn len(&self) -> usize {
        self.features.shape()[0]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.shape()[1]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.features.data()[i * d..(i + 1) * d]
    }
}

pub trait FeatureExtractor {
    fn id(&self) -> String;
    /// Map an `N x C x H x W` image batch in `[-1, 1]` to `N x D` features.
    fn extract(&self, images: &Tensor) -> Result<Tensor>;
}

fn check_images(images: &Tensor) -> Result<(usize, usize)> {
    let (n, c, h, w) = images.dims4().map_err(MetricError::Tensor)?;
    let slack = 1e-9;
    if let Some(v) = images.data().iter().find(|v| !((-1.0 - slack)..=(1.0 + slack)).contains(*v)) {
        return Err(MetricError::Validation(format!("image value {v} outside [-1, 1]")));
    }
    Ok((n, c * h * w))
}

/// Flattened image pixels.
pub struct RawPixels;

impl FeatureExtractor for RawPixels {
    fn id(&self) -> String {
        "raw-pixels".into()
    }

    fn extract(&self, images: &Tensor) -> Result<Tensor> {
        let (n, d) = check_images(images)?;
        Ok(images.reshape(&[n, d]).map_err(MetricError::Tensor)?)
    }
}

/// Fixed seeded Gaussian projection of the flattened image.
pub struct RandomProjection {
    pub dim: usize,
    pub seed: u64,
}

impl FeatureExtractor for RandomProjection {
    fn id(&self) -> String {
        format!("rp:{}:{}", self.dim, self.seed)
    }

    fn extract(&self, images: &Tensor) -> Result<Tensor> {
        if self.dim == 0 {
            return Err(MetricError::Invalid("projection dimension must be positive".into()));
        }
        let (n, d) = check_images(images)?;
        let mut rng = Rng::new(self.seed);
        // Projection entries scaled by 1/sqrt(D) to keep feature norms stable.
        let scale = 1.0 / (self.dim as f64).sqrt();
        let proj = rng.normal_vec(d * self.dim, 0.0, scale);
        let flat = images.reshape(&[n, d]).map_err(MetricError::Tensor)?;
        let out = ganforge_core::linalg::matmul(flat.data(), &proj, n, d, self.dim);
        Ok(Tensor::new(vec![n, self.dim], out).map_err(MetricError::Tensor)?)
    }
}

pub fn extract_features(images: &Tensor, extractor: &dyn FeatureExtractor, source: Source) -> Result<FeatureSet> {
    let features = extractor.extract(images)?;
    FeatureSet::new(features, extractor.id(), source)
}
