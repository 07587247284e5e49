//! Adversarial losses.
//!
//! Vanilla mode follows the minimax objective: the discriminator descends
//! `-mean[log D(x) + log(1 - D(G(z)))]` and the generator descends
//! `mean[log(1 - D(G(z)))]`. Scores are clamped to `[1e-7, 1 - 1e-7]`
//! before any logarithm.

use ganforge_core::{NodeId, Tape, Tensor};

use crate::error::{GanError, Result};

pub const SCORE_CLAMP: f64 = 1e-7;

fn as_batch_vector(tape: &mut Tape, id: NodeId) -> Result<NodeId> {
    match *tape.shape(id) {
        [_] => Ok(id),
        [n, 1] => Ok(tape.reshape(id, &[n])?),
        ref s => Err(GanError::Invalid(format!("expected per-sample scores, got shape {s:?}"))),
    }
}

/// Build `(disc_loss, gen_loss)` nodes from per-sample score nodes.
pub fn vanilla_losses(tape: &mut Tape, d_real: NodeId, d_fake: NodeId) -> Result<(NodeId, NodeId)> {
    let dr = as_batch_vector(tape, d_real)?;
    let df = as_batch_vector(tape, d_fake)?;
    let dr = tape.clamp(dr, SCORE_CLAMP, 1.0 - SCORE_CLAMP);
    let df = tape.clamp(df, SCORE_CLAMP, 1.0 - SCORE_CLAMP);
    let ones_r = tape.constant(Tensor::ones(tape.shape(dr)));
    let log_dr = tape.log(dr);
    let one_minus_df = tape.sub(ones_r, df)?;
    let log_omdf = tape.log(one_minus_df);
    let joint = tape.add(log_dr, log_omdf)?;
    let mean_joint = tape.mean_all(joint);
    let disc_loss = tape.neg(mean_joint);
    let gen_loss = tape.mean_all(log_omdf);
    Ok((disc_loss, gen_loss))
}

/// Value-level convenience for tests and reporting.
pub fn vanilla_losses_value(d_real: &Tensor, d_fake: &Tensor) -> Result<(f64, f64)> {
    let mut tape = Tape::new();
    let r = tape.leaf(d_real.clone(), false);
    let f = tape.leaf(d_fake.clone(), false);
    let (d, g) = vanilla_losses(&mut tape, r, f)?;
    Ok((
        tape.value(d).scalar_value().map_err(GanError::Tensor)?,
        tape.value(g).scalar_value().map_err(GanError::Tensor)?,
    ))
}

/// Generator objective in vanilla mode: descend `mean log(1 - D(G(z)))`.
pub fn vanilla_gen_loss(tape: &mut Tape, d_fake: NodeId) -> Result<NodeId> {
    let df = as_batch_vector(tape, d_fake)?;
    let df = tape.clamp(df, SCORE_CLAMP, 1.0 - SCORE_CLAMP);
    let ones = tape.constant(Tensor::ones(tape.shape(df)));
    let one_minus = tape.sub(ones, df)?;
    let log_om = tape.log(one_minus);
    Ok(tape.mean_all(log_om))
}

/// Wasserstein critic objective without the penalty term:
/// critic descends `mean D(fake) - mean D(real)`, generator descends
/// `-mean D(fake)`.
pub fn wgan_base_losses(tape: &mut Tape, d_real: NodeId, d_fake: NodeId) -> Result<(NodeId, NodeId)> {
    let dr = as_batch_vector(tape, d_real)?;
    let df = as_batch_vector(tape, d_fake)?;
    let mean_r = tape.mean_all(dr);
    let mean_f = tape.mean_all(df);
    let critic = tape.sub(mean_f, mean_r)?;
    let gen = tape.neg(mean_f);
    Ok((critic, gen))
}

/// Generator objective in Wasserstein mode: descend `-mean D(G(z))`.
pub fn wgan_gen_loss(tape: &mut Tape, d_fake: NodeId) -> Result<NodeId> {
    let df = as_batch_vector(tape, d_fake)?;
    let mean_f = tape.mean_all(df);
    Ok(tape.neg(mean_f))
}
