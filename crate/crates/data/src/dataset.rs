//! The canonical labeled image collection: `N x C x 64 x 64` in `[-1, 1]`.

use ganforge_core::Tensor;
use serde::{Deserialize, Serialize};

use crate::error::{DataError, Result};

pub const RANGE_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Val,
    Test,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleSource {
    Real,
    Synthetic,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub images: Tensor,
    pub labels: Vec<usize>,
    pub sources: Vec<SampleSource>,
    pub class_names: Vec<String>,
    pub split_tag: SplitTag,
    pub provenance: String,
}

impl Dataset {
    pub fn new(
        images: Tensor,
        labels: Vec<usize>,
        class_names: Vec<String>,
        split_tag: SplitTag,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let sources = vec![SampleSource::Real; labels.len()];
        Self::with_sources(images, labels, sources, class_names, split_tag, provenance)
    }

    pub fn with_sources(
        images: Tensor,
        labels: Vec<usize>,
        sources: Vec<SampleSource>,
        class_names: Vec<String>,
        split_tag: SplitTag,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        let (n, _c, h, w) = images.dims4().map_err(DataError::Tensor)?;
        if h != crate::IMAGE_SIDE || w != crate::IMAGE_SIDE {
            return Err(DataError::Invalid(format!(
                "dataset images must be {0}x{0}, got {h}x{w}",
                crate::IMAGE_SIDE
            )));
        }
        if labels.len() != n || sources.len() != n {
            return Err(DataError::Invalid(format!(
                "{n} images but {} labels / {} source flags",
                labels.len(),
                sources.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(DataError::Invalid(format!(
                "label {bad} outside {} declared classes",
                class_names.len()
            )));
        }
        let lo = -1.0 - RANGE_SLACK;
        let hi = 1.0 + RANGE_SLACK;
        if let Some(v) = images.data().iter().find(|v| !(lo..=hi).contains(*v)) {
            return Err(DataError::Invalid(format!("pixel {v} outside [-1, 1]")));
        }
        Ok(Dataset {
            images,
            labels,
            sources,
            class_names,
            split_tag,
            provenance: provenance.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.images.shape()[1]
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// New dataset holding `indices` in the given order.
    pub fn subset(&self, indices: &[usize], tag: SplitTag) -> Result<Dataset> {
        let samples: Vec<Tensor> = indices
            .iter()
            .map(|&i| self.images.slice_sample(i).map_err(DataError::Tensor))
            .collect::<Result<_>>()?;
        let images = if samples.is_empty() {
            return Err(DataError::Invalid("empty subset".into()));
        } else {
            Tensor::stack(&samples).map_err(DataError::Tensor)?
        };
        Dataset::with_sources(
            images,
            indices.iter().map(|&i| self.labels[i]).collect(),
            indices.iter().map(|&i| self.sources[i]).collect(),
            self.class_names.clone(),
            tag,
            self.provenance.clone(),
        )
    }

    /// Indices per class, in dataset order.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_classes()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    /// Concatenate another dataset with the same label space.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.class_names != other.class_names {
            return Err(DataError::Invalid(format!(
                "label spaces differ: {:?} vs {:?}",
                self.class_names, other.class_names
            )));
        }
        if self.channels() != other.channels() {
            return Err(DataError::Invalid("channel widths differ".into()));
        }
        let mut data = self.images.data().to_vec();
        data.extend_from_slice(other.images.data());
        let mut shape = self.images.shape().to_vec();
        shape[0] += other.len();
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        let mut sources = self.sources.clone();
        sources.extend_from_slice(&other.sources);
        Dataset::with_sources(
            Tensor::new(shape, data).map_err(DataError::Tensor)?,
            labels,
            sources,
            self.class_names.clone(),
            self.split_tag,
            format!("{}+{}", self.provenance, other.provenance),
        )
    }
}
