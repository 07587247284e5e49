//! The small downstream CNN: three strided convolution blocks, global
//! average pooling, and a linear head. The pooled activations double as
//! the domain feature extractor for the metric suite.

use ganforge_core::{BnMode, NodeId, Tape, Tensor};
use ganforge_gan::checkpoint::{decode_container, encode_container};
use ganforge_gan::{Bound, Layer, Network, NetworkKind, SnSetting};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const DEFAULT_WIDTH: usize = 32;

#[derive(Clone, Debug)]
pub struct Classifier {
    pub net: Network,
    pub in_channels: usize,
    pub n_classes: usize,
    pub width: usize,
}

/// Index of the global-average-pool layer, whose output is the
/// penultimate feature vector.
const GAP_LAYER: usize = 9;

/// Three stride-2 convolution blocks (batch-norm + LeakyReLU), global
/// average pooling, then a linear head. The penultimate width is `4 *
/// width` (128 at the default width of 32).
pub fn build_classifier(in_channels: usize, n_classes: usize, width: usize) -> Result<Classifier> {
    if n_classes < 2 {
        return Err(HarnessError::Invalid(format!("classifier needs >= 2 classes, got {n_classes}")));
    }
    if width == 0 {
        return Err(HarnessError::Invalid("classifier width must be positive".into()));
    }
    let w = width;
    let layers = vec![
        Layer::Conv2d { in_ch: in_channels, out_ch: w, k: 3, stride: 2, pad: 1 },
        Layer::BatchNorm2d { ch: w },
        Layer::LeakyRelu { slope: 0.2 },
        Layer::Conv2d { in_ch: w, out_ch: 2 * w, k: 3, stride: 2, pad: 1 },
        Layer::BatchNorm2d { ch: 2 * w },
        Layer::LeakyRelu { slope: 0.2 },
        Layer::Conv2d { in_ch: 2 * w, out_ch: 4 * w, k: 3, stride: 2, pad: 1 },
        Layer::BatchNorm2d { ch: 4 * w },
        Layer::LeakyRelu { slope: 0.2 },
        Layer::GlobalAvgPool,
        Layer::Linear { in_dim: 4 * w, out_dim: n_classes },
    ];
    let net = Network::from_layers(NetworkKind::Classifier, layers, vec![in_channels, 64, 64]);
    Ok(Classifier { net, in_channels, n_classes, width })
}

impl Classifier {
    pub fn init(&mut self, seed: u64) {
        self.net.init(seed);
    }

    pub fn feature_width(&self) -> usize {
        4 * self.width
    }

    /// Tape-level forward returning `(logits, penultimate features)`.
    pub fn forward(
        &mut self,
        tape: &mut Tape,
        bound: &Bound,
        images: NodeId,
        mode: BnMode,
    ) -> Result<(NodeId, NodeId)> {
        let (logits, feat) = self.net.forward_collect(tape, bound, images, mode, GAP_LAYER)?;
        Ok((logits, feat.expect("GAP layer exists")))
    }

    /// Value-level logits in eval mode.
    pub fn logits_value(&mut self, images: &Tensor) -> Result<Tensor> {
        Ok(self.net.forward_value(images, BnMode::Eval, SnSetting::Off)?)
    }

    /// Value-level penultimate features in eval mode.
    pub fn features_value(&mut self, images: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let bound = self.net.bind(&mut tape, false, SnSetting::Off)?;
        let x = tape.leaf(images.clone(), false);
        let (_, feat) = self.forward(&mut tape, &bound, x, BnMode::Eval)?;
        Ok(tape.value(feat).clone())
    }

    /// Softmax class posteriors in eval mode.
    pub fn probs_value(&mut self, images: &Tensor) -> Result<Tensor> {
        let logits = self.logits_value(images)?;
        let (n, k) = logits.dims2().map_err(HarnessError::Tensor)?;
        let mut out = vec![0.0; n * k];
        for (row_out, row) in out.chunks_exact_mut(k).zip(logits.data().chunks_exact(k)) {
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for (o, &l) in row_out.iter_mut().zip(row) {
                *o = (l - m).exp();
                z += *o;
            }
            row_out.iter_mut().for_each(|o| *o /= z);
        }
        Ok(Tensor::new(vec![n, k], out).map_err(HarnessError::Tensor)?)
    }
}

/// The metric suite plugs the classifier in through this adapter.
impl ganforge_metrics::FeatureExtractor for Classifier {
    fn id(&self) -> String {
        format!("classifier-features:{}", self.feature_width())
    }

    fn extract(&self, images: &Tensor) -> ganforge_metrics::Result<Tensor> {
        let mut this = self.clone();
        this.features_value(images)
            .map_err(|e| ganforge_metrics::MetricError::Invalid(e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
struct ClassifierHeader {
    format: String,
    in_channels: usize,
    n_classes: usize,
    width: usize,
    init_seed: u64,
}

const CLS_FORMAT: &str = "ganforge-classifier-checkpoint-v1";

pub fn save_classifier(path: &std::path::Path, cls: &Classifier) -> Result<()> {
    let header = ClassifierHeader {
        format: CLS_FORMAT.into(),
        in_channels: cls.in_channels,
        n_classes: cls.n_classes,
        width: cls.width,
        init_seed: cls.net.init_seed,
    };
    let mut tensors = std::collections::BTreeMap::new();
    for (k, v) in &cls.net.params {
        tensors.insert(format!("p.{k}"), v.clone());
    }
    for (k, v) in &cls.net.buffers {
        tensors.insert(format!("buf.{k}"), v.clone());
    }
    let json = serde_json::to_vec(&header).expect("header serializes");
    std::fs::write(path, encode_container(&json, &tensors))?;
    Ok(())
}

pub fn load_classifier(path: &std::path::Path) -> Result<Classifier> {
    parse_classifier(&std::fs::read(path)?)
}

pub fn parse_classifier(bytes: &[u8]) -> Result<Classifier> {
    let (header_bytes, tensors) = decode_container(bytes)?;
    let header: ClassifierHeader = serde_json::from_slice(&header_bytes)
        .map_err(|e| HarnessError::Invalid(format!("classifier header: {e}")))?;
    if header.format != CLS_FORMAT {
        return Err(HarnessError::Invalid(format!("unknown classifier format {:?}", header.format)));
    }
    let mut cls = build_classifier(header.in_channels, header.n_classes, header.width)?;
    cls.init(header.init_seed);
    for (name, expected) in cls.net.params.clone() {
        let got = tensors
            .get(&format!("p.{name}"))
            .ok_or_else(|| HarnessError::Invalid(format!("missing classifier tensor p.{name}")))?;
        if got.shape() != expected.shape() {
            return Err(HarnessError::Invalid(format!(
                "classifier tensor p.{name} has shape {:?}, expected {:?}",
                got.shape(),
                expected.shape()
            )));
        }
        cls.net.params.insert(name, got.clone());
    }
    cls.net.buffers = tensors
        .iter()
        .filter_map(|(k, v)| k.strip_prefix("buf.").map(|r| (r.to_string(), v.clone())))
        .collect();
    Ok(cls)
}
