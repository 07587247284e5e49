//! Layer descriptors and the parameterized network container.
//!
//! A `Network` owns named parameters and non-trainable buffers. A forward
//! pass first `bind`s the parameters onto a tape (optionally wrapping
//! discriminator convolution weights in spectral normalization), then runs
//! any number of forwards against that binding so real/fake/interpolated
//! batches share one set of parameter nodes.

use std::collections::BTreeMap;

use ganforge_core::composites::{batchnorm, BnMode, RunningStats};
use ganforge_core::{derive_seed, NodeId, Rng, Tape, Tensor};
use serde::{Deserialize, Serialize};

use crate::error::{GanError, Result};
use crate::sn::power_iterate;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Layer {
    Conv2d { in_ch: usize, out_ch: usize, k: usize, stride: usize, pad: usize },
    ConvTranspose2d { in_ch: usize, out_ch: usize, k: usize, stride: usize, pad: usize },
    BatchNorm2d { ch: usize },
    Relu,
    LeakyRelu { slope: f64 },
    Tanh,
    Sigmoid,
    Flatten,
    GlobalAvgPool,
    Linear { in_dim: usize, out_dim: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkKind {
    Generator,
    Discriminator,
    Critic,
    Classifier,
}

/// How spectral normalization participates in a binding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnSetting {
    Off,
    /// Run `power_iters` power-iteration steps, updating the persistent
    /// `u` buffers, then divide each convolution weight by the estimate.
    Update { power_iters: usize },
    /// Normalize with the current `u` buffers without advancing them.
    Frozen,
}

#[derive(Clone, Debug)]
pub struct Network {
    pub kind: NetworkKind,
    pub layers: Vec<Layer>,
    pub params: BTreeMap<String, Tensor>,
    pub buffers: BTreeMap<String, Tensor>,
    pub in_shape: Vec<usize>,
    pub init_seed: u64,
}

/// Parameter nodes bound onto a tape for one or more forward passes.
pub struct Bound {
    /// Raw parameter leaves, keyed by parameter name.
    pub leaves: BTreeMap<String, NodeId>,
    /// Effective nodes used by forward (spectrally normalized where active).
    effective: BTreeMap<String, NodeId>,
}

impl Bound {
    /// Map gradients-by-node back to gradients-by-parameter-name.
    pub fn named_grads(&self, grads: &ganforge_core::Gradients) -> BTreeMap<String, Tensor> {
        self.leaves
            .iter()
            .filter_map(|(name, &id)| grads.get(id).map(|t| (name.clone(), t.clone())))
            .collect()
    }
}

fn weight_name(idx: usize) -> String {
    format!("l{idx:02}.w")
}

impl Network {
    pub fn from_layers(kind: NetworkKind, layers: Vec<Layer>, in_shape: Vec<usize>) -> Self {
        Network {
            kind,
            layers,
            params: BTreeMap::new(),
            buffers: BTreeMap::new(),
            in_shape,
            init_seed: 0,
        }
    }

    /// Draw all parameters: convolution weights from N(0, 0.02), batch-norm
    /// gain from N(1, 0.02) with zero shift, linear layers like convolutions.
    pub fn init(&mut self, seed: u64) {
        self.init_seed = seed;
        self.params.clear();
        self.buffers.clear();
        let mut rng = Rng::new(derive_seed(seed, "init"));
        for (i, layer) in self.layers.iter().enumerate() {
            match *layer {
                Layer::Conv2d { in_ch, out_ch, k, .. } => {
                    let n = out_ch * in_ch * k * k;
                    let w = Tensor::new(vec![out_ch, in_ch, k, k], rng.normal_vec(n, 0.0, 0.02)).unwrap();
                    self.params.insert(weight_name(i), w);
                }
                Layer::ConvTranspose2d { in_ch, out_ch, k, .. } => {
                    let n = in_ch * out_ch * k * k;
                    let w = Tensor::new(vec![in_ch, out_ch, k, k], rng.normal_vec(n, 0.0, 0.02)).unwrap();
                    self.params.insert(weight_name(i), w);
                }
                Layer::BatchNorm2d { ch } => {
                    let gamma = Tensor::new(vec![ch], rng.normal_vec(ch, 1.0, 0.02)).unwrap();
                    self.params.insert(format!("l{i:02}.gamma"), gamma);
                    self.params.insert(format!("l{i:02}.beta"), Tensor::zeros(&[ch]));
                    self.buffers.insert(format!("l{i:02}.running_mean"), Tensor::zeros(&[ch]));
                    self.buffers.insert(format!("l{i:02}.running_var"), Tensor::ones(&[ch]));
                }
                Layer::Linear { in_dim, out_dim } => {
                    let w = Tensor::new(vec![out_dim, in_dim], rng.normal_vec(out_dim * in_dim, 0.0, 0.02)).unwrap();
                    self.params.insert(weight_name(i), w);
                    self.params.insert(format!("l{i:02}.b"), Tensor::zeros(&[out_dim]));
                }
                _ => {}
            }
        }
    }

    /// Whether spectral normalization applies to this network's convolutions.
    fn sn_applies(&self) -> bool {
        matches!(self.kind, NetworkKind::Discriminator | NetworkKind::Critic)
    }

    /// Bind parameters as tape leaves. `requires_grad = false` binds them
    /// as constants (used when the discriminator only scores generator
    /// samples). Spectral normalization, when active, divides each
    /// convolution weight by its estimated top singular value; the `u`
    /// power-iteration vectors persist in the buffer map.
    pub fn bind(&mut self, tape: &mut Tape, requires_grad: bool, sn: SnSetting) -> Result<Bound> {
        let mut leaves = BTreeMap::new();
        let mut effective = BTreeMap::new();
        let layers = self.layers.clone();
        let normalize = self.sn_applies() && sn != SnSetting::Off;
        for (i, layer) in layers.iter().enumerate() {
            let names: Vec<String> = match layer {
                Layer::Conv2d { .. } | Layer::ConvTranspose2d { .. } => vec![weight_name(i)],
                Layer::BatchNorm2d { .. } => vec![format!("l{i:02}.gamma"), format!("l{i:02}.beta")],
                Layer::Linear { .. } => vec![weight_name(i), format!("l{i:02}.b")],
                _ => continue,
            };
            for name in names {
                let value = self
                    .params
                    .get(&name)
                    .ok_or_else(|| GanError::Invalid(format!("missing parameter {name}; call init first")))?
                    .clone();
                let leaf = tape.leaf(value, requires_grad);
                leaves.insert(name.clone(), leaf);
                effective.insert(name.clone(), leaf);
            }
            if let Layer::Conv2d { in_ch, out_ch, k, .. } = *layer {
                if !normalize {
                    continue;
                }
                let name = weight_name(i);
                let (rows, cols) = (out_ch, in_ch * k * k);
                let w2d = self.params[&name].reshape(&[rows, cols])?;
                let u_name = format!("l{i:02}.sn_u");
                let u = self
                    .buffers
                    .entry(u_name.clone())
                    .or_insert_with(|| {
                        let mut rng = Rng::new(derive_seed(self.init_seed, &format!("sn_u/{name}")));
                        let mut v = rng.normal_vec(rows, 0.0, 1.0);
                        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
                        v.iter_mut().for_each(|x| *x /= norm);
                        Tensor::from_vec(v)
                    })
                    .clone();
                let iters = match sn {
                    SnSetting::Update { power_iters } => power_iters.max(1),
                    _ => 1,
                };
                let (u_new, v_new, _sigma) = power_iterate(&w2d, &u, iters)?;
                let (uu, vv) = if matches!(sn, SnSetting::Update { .. }) {
                    self.buffers.insert(u_name, u_new.clone());
                    (u_new, v_new)
                } else {
                    // Frozen: derive v from the stored u without advancing it.
                    let (_, v_cur, _) = power_iterate(&w2d, &u, 1)?;
                    (u, v_cur)
                };
                // sigma as a graph node: <u, W v> = sum(W * outer(u, v)),
                // differentiable through W with u, v held constant.
                let mut outer = vec![0.0; rows * cols];
                for r in 0..rows {
                    for c in 0..cols {
                        outer[r * cols + c] = uu.data()[r] * vv.data()[c];
                    }
                }
                let wshape = self.params[&name].shape().to_vec();
                let outer_t = Tensor::new(vec![rows, cols], outer)?.reshape(&wshape)?;
                let leaf = leaves[&name];
                let outer_id = tape.constant(outer_t);
                let prod = tape.mul(leaf, outer_id)?;
                let sigma_node = tape.sum_all(prod);
                let sigma_floored = tape.clamp(sigma_node, 1e-12, f64::INFINITY);
                let sigma_full = tape.fill_like(sigma_floored, &wshape)?;
                let normalized = tape.div(leaf, sigma_full)?;
                effective.insert(name, normalized);
            }
        }
        Ok(Bound { leaves, effective })
    }

    /// Run the layer stack. Batch-norm layers use batch statistics in
    /// `BnMode::Train` (updating the running buffers) and the running
    /// buffers in `BnMode::Eval`.
    pub fn forward(&mut self, tape: &mut Tape, bound: &Bound, input: NodeId, mode: BnMode) -> Result<NodeId> {
        Ok(self.run(tape, bound, input, mode, None, None)?.0)
    }

    /// Like [`Network::forward`] but also returns the activation produced
    /// by layer index `collect_after` (e.g. classifier penultimate
    /// features after global average pooling).
    pub fn forward_collect(
        &mut self,
        tape: &mut Tape,
        bound: &Bound,
        input: NodeId,
        mode: BnMode,
        collect_after: usize,
    ) -> Result<(NodeId, Option<NodeId>)> {
        self.run(tape, bound, input, mode, Some(collect_after), None)
    }

    fn run(
        &mut self,
        tape: &mut Tape,
        bound: &Bound,
        input: NodeId,
        mode: BnMode,
        collect_after: Option<usize>,
        mut trace: Option<&mut Vec<Vec<usize>>>,
    ) -> Result<(NodeId, Option<NodeId>)> {
        let mut x = input;
        let mut collected = None;
        let layers = self.layers.clone();
        for (i, layer) in layers.iter().enumerate() {
            x = match *layer {
                Layer::Conv2d { stride, pad, .. } => {
                    let w = bound.effective[&weight_name(i)];
                    tape.conv2d(x, w, stride, pad)?
                }
                Layer::ConvTranspose2d { stride, pad, .. } => {
                    let w = bound.effective[&weight_name(i)];
                    tape.conv2d_transpose(x, w, stride, pad)?
                }
                Layer::BatchNorm2d { .. } => {
                    let gamma = bound.effective[&format!("l{i:02}.gamma")];
                    let beta = bound.effective[&format!("l{i:02}.beta")];
                    let mut stats = RunningStats {
                        mean: self.buffers[&format!("l{i:02}.running_mean")].clone(),
                        var: self.buffers[&format!("l{i:02}.running_var")].clone(),
                    };
                    let out = batchnorm(tape, x, gamma, beta, mode, &mut stats, 1e-5, 0.1)?;
                    if mode == BnMode::Train {
                        self.buffers.insert(format!("l{i:02}.running_mean"), stats.mean);
                        self.buffers.insert(format!("l{i:02}.running_var"), stats.var);
                    }
                    out
                }
                Layer::Relu => tape.relu(x),
                Layer::LeakyRelu { slope } => tape.leaky_relu(x, slope),
                Layer::Tanh => tape.tanh(x),
                Layer::Sigmoid => tape.sigmoid(x),
                Layer::Flatten => {
                    let shape = tape.shape(x).to_vec();
                    let n = shape[0];
                    let rest: usize = shape[1..].iter().product();
                    tape.reshape(x, &[n, rest])?
                }
                Layer::GlobalAvgPool => {
                    let (_, _, h, w) = tape.value(x).dims4().map_err(GanError::Tensor)?;
                    let s = tape.sum_spatial(x)?;
                    tape.scale(s, 1.0 / (h * w) as f64)
                }
                Layer::Linear { in_dim, out_dim } => {
                    // Expressed as a 1x1 convolution so the bias reuses the
                    // per-channel broadcast.
                    let (n, d) = tape.value(x).dims2().map_err(GanError::Tensor)?;
                    if d != in_dim {
                        return Err(GanError::Invalid(format!(
                            "linear layer {i} expects {in_dim} features, got {d}"
                        )));
                    }
                    let x4 = tape.reshape(x, &[n, d, 1, 1])?;
                    let w = bound.effective[&weight_name(i)];
                    let w4 = tape.reshape(w, &[out_dim, in_dim, 1, 1])?;
                    let y = tape.conv2d(x4, w4, 1, 0)?;
                    let b = bound.effective[&format!("l{i:02}.b")];
                    let b4 = tape.bcast_chan(b, &[n, out_dim, 1, 1])?;
                    let yb = tape.add(y, b4)?;
                    tape.reshape(yb, &[n, out_dim])?
                }
            };
            if let Some(t) = trace.as_deref_mut() {
                t.push(tape.shape(x).to_vec());
            }
            if collect_after == Some(i) {
                collected = Some(x);
            }
        }
        Ok((x, collected))
    }

    /// Value-level forward on a private tape (no gradients).
    pub fn forward_value(&mut self, input: &Tensor, mode: BnMode, sn: SnSetting) -> Result<Tensor> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape, false, sn)?;
        let x = tape.leaf(input.clone(), false);
        let out = self.forward(&mut tape, &bound, x, mode)?;
        Ok(tape.value(out).clone())
    }

    /// Per-layer output shapes for a given batch size (eval mode, buffers
    /// untouched); used by the shape-fidelity checks.
    pub fn layer_output_shapes(&mut self, batch: usize) -> Result<Vec<Vec<usize>>> {
        let snapshot = self.buffers.clone();
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape, false, SnSetting::Off)?;
        let mut shape = vec![batch];
        shape.extend_from_slice(&self.in_shape);
        let x = tape.leaf(Tensor::zeros(&shape), false);
        let mut shapes = Vec::with_capacity(self.layers.len());
        self.run(&mut tape, &bound, x, BnMode::Eval, None, Some(&mut shapes))?;
        self.buffers = snapshot;
        Ok(shapes)
    }
}
