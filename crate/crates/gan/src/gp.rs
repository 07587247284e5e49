//! Gradient penalty on interpolated samples.
//!
//! Draws one uniform mixing coefficient per sample, interpolates between
//! real and fake batches, and penalizes `(||grad_xhat D(xhat)||_2 - 1)^2`.
//! The input-gradient is built as tape nodes, so the penalty remains
//! differentiable with respect to the critic parameters.

use ganforge_core::{BnMode, NodeId, Rng, Tape, Tensor};

use crate::error::{GanError, Result};
use crate::network::{Bound, Network, SnSetting};

const NORM_EPS: f64 = 1e-12;

/// Build the penalty node on an existing tape against an existing binding.
pub fn gradient_penalty_on_tape(
    tape: &mut Tape,
    critic: &mut Network,
    bound: &Bound,
    real: &Tensor,
    fake: &Tensor,
    lambda: f64,
    rng: &mut Rng,
) -> Result<NodeId> {
    if lambda < 0.0 {
        return Err(GanError::Invalid(format!("gradient-penalty lambda must be >= 0, got {lambda}")));
    }
    if real.shape() != fake.shape() {
        return Err(GanError::Invalid(format!(
            "real {:?} and fake {:?} batches must share a shape",
            real.shape(),
            fake.shape()
        )));
    }
    let n = real.shape()[0];
    let stride: usize = real.shape()[1..].iter().product();
    let mut mixed = vec![0.0; n * stride];
    for s in 0..n {
        let alpha = rng.uniform();
        let r = &real.data()[s * stride..(s + 1) * stride];
        let f = &fake.data()[s * stride..(s + 1) * stride];
        for ((m, &rv), &fv) in mixed[s * stride..(s + 1) * stride].iter_mut().zip(r).zip(f) {
            *m = alpha * rv + (1.0 - alpha) * fv;
        }
    }
    let xhat = tape.leaf(Tensor::new(real.shape().to_vec(), mixed)?, true);
    let scores = critic.forward(tape, bound, xhat, BnMode::Eval)?;
    let flat = match *tape.shape(scores) {
        [_] => scores,
        [nn, 1] => tape.reshape(scores, &[nn])?,
        ref s => return Err(GanError::Invalid(format!("critic must emit per-sample scores, got {s:?}"))),
    };
    let total = tape.sum_all(flat);
    let grad = tape
        .grad_nodes(total, &[xhat])
        .map_err(GanError::Tensor)?[0]
        .ok_or_else(|| GanError::Invalid("critic output does not depend on its input".into()))?;
    let sq = tape.square(grad);
    let per_sample = tape.sum_per_sample(sq)?;
    let guarded = tape.add_scalar(per_sample, NORM_EPS);
    let norms = tape.sqrt(guarded);
    let dev = tape.add_scalar(norms, -1.0);
    let dev2 = tape.square(dev);
    let mean = tape.mean_all(dev2);
    Ok(tape.scale(mean, lambda))
}

/// Standalone evaluation: returns the scalar penalty for a critic and a
/// real/fake batch pair, seeded for the interpolation draw.
pub fn gradient_penalty(
    critic: &mut Network,
    real: &Tensor,
    fake: &Tensor,
    lambda: f64,
    seed: u64,
) -> Result<Tensor> {
    let mut rng = Rng::new(seed);
    let mut tape = Tape::new();
    let bound = critic.bind(&mut tape, true, SnSetting::Off)?;
    let pen = gradient_penalty_on_tape(&mut tape, critic, &bound, real, fake, lambda, &mut rng)?;
    Ok(tape.value(pen).clone())
}
