//! Higher-level graph builders assembled from tape primitives.
//!
//! Batch normalization is emitted as a composition of primitive nodes, so
//! its backward pass (and double backward) comes from the generic
//! machinery rather than a bespoke derivative.

use crate::error::{Result, TensorError};
use crate::tape::{NodeId, Tape};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BnMode {
    Train,
    Eval,
}

/// Per-channel running statistics for batch normalization.
#[derive(Clone, Debug)]
pub struct RunningStats {
    pub mean: Tensor,
    pub var: Tensor,
}

impl RunningStats {
    pub fn new(channels: usize) -> Self {
        RunningStats { mean: Tensor::zeros(&[channels]), var: Tensor::ones(&[channels]) }
    }
}

/// Batch normalization over `N x C x H x W`.
///
/// Train mode standardizes by biased batch statistics and folds them into
/// the running buffers with momentum (the running variance stores the
/// unbiased estimate). Eval mode standardizes by the running buffers.
pub fn batchnorm(
    tape: &mut Tape,
    x: NodeId,
    gamma: NodeId,
    beta: NodeId,
    mode: BnMode,
    stats: &mut RunningStats,
    eps: f64,
    momentum: f64,
) -> Result<NodeId> {
    let (n, c, h, w) = tape.value(x).dims4()?;
    let shape = [n, c, h, w];
    if tape.shape(gamma) != [c] || tape.shape(beta) != [c] {
        return Err(TensorError::shape(
            "batchnorm",
            format!("gamma/beta must be [{c}], got {:?}/{:?}", tape.shape(gamma), tape.shape(beta)),
        ));
    }
    let m = n * h * w;
    let (mean_id, var_id) = match mode {
        BnMode::Train => {
            if m < 2 {
                return Err(TensorError::Invalid(format!(
                    "batchnorm train mode needs N*H*W >= 2, got {m}"
                )));
            }
            let sum = tape.sum_chan(x)?;
            let mean = tape.scale(sum, 1.0 / m as f64);
            let mean_b = tape.bcast_chan(mean, &shape)?;
            let centered = tape.sub(x, mean_b)?;
            let sq = tape.square(centered);
            let var_sum = tape.sum_chan(sq)?;
            let var = tape.scale(var_sum, 1.0 / m as f64);

            let bessel = m as f64 / (m as f64 - 1.0);
            let batch_mean = tape.value(mean).data().to_vec();
            let batch_var = tape.value(var).data().to_vec();
            for ci in 0..c {
                let rm = &mut stats.mean.data_mut()[ci];
                *rm = (1.0 - momentum) * *rm + momentum * batch_mean[ci];
                let rv = &mut stats.var.data_mut()[ci];
                *rv = (1.0 - momentum) * *rv + momentum * batch_var[ci] * bessel;
            }
            (mean, var)
        }
        BnMode::Eval => {
            let mean = tape.constant(stats.mean.clone());
            let var = tape.constant(stats.var.clone());
            (mean, var)
        }
    };
    let mean_b = tape.bcast_chan(mean_id, &shape)?;
    let centered = tape.sub(x, mean_b)?;
    let var_eps = tape.add_scalar(var_id, eps);
    let denom = tape.sqrt(var_eps);
    let denom_b = tape.bcast_chan(denom, &shape)?;
    let xhat = tape.div(centered, denom_b)?;
    let gamma_b = tape.bcast_chan(gamma, &shape)?;
    let beta_b = tape.bcast_chan(beta, &shape)?;
    let scaled = tape.mul(xhat, gamma_b)?;
    tape.add(scaled, beta_b)
}

/// Elementwise activation kinds used by the networks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ActKind {
    Relu,
    LeakyRelu(f64),
    Tanh,
    Sigmoid,
}

pub fn activation(tape: &mut Tape, kind: ActKind, x: NodeId) -> Result<NodeId> {
    Ok(match kind {
        ActKind::Relu => tape.relu(x),
        ActKind::LeakyRelu(slope) => {
            if !(0.0 < slope && slope < 1.0) {
                return Err(TensorError::Invalid(format!(
                    "leaky_relu slope must lie in (0,1), got {slope}"
                )));
            }
            tape.leaky_relu(x, slope)
        }
        ActKind::Tanh => tape.tanh(x),
        ActKind::Sigmoid => tape.sigmoid(x),
    })
}
