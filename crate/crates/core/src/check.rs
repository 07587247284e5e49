//! Central finite-difference gradient checking.

use crate::error::{Result, TensorError};
use crate::rng::Rng;
use crate::tape::{NodeId, Tape};
use crate::tensor::Tensor;

fn eval_scalar<F>(build: &F, point: &Tensor) -> Result<f64>
where
    F: Fn(&mut Tape, NodeId) -> Result<NodeId>,
{
    let mut tape = Tape::new();
    let x = tape.leaf(point.clone(), false);
    let loss = build(&mut tape, x)?;
    tape.value(loss).scalar_value()
}

fn check_coords<F>(build: F, point: &Tensor, step: f64, coords: &[usize]) -> Result<f64>
where
    F: Fn(&mut Tape, NodeId) -> Result<NodeId>,
{
    if step <= 0.0 {
        return Err(TensorError::Invalid(format!("grad_check step must be positive, got {step}")));
    }
    let mut tape = Tape::new();
    let x = tape.leaf(point.clone(), true);
    let loss = build(&mut tape, x)?;
    if !tape.value(loss).scalar_value()?.is_finite() {
        return Err(TensorError::NonFinite("grad_check loss".into()));
    }
    let mut grads = tape.backward(loss)?;
    let analytic = grads.take(x).expect("leaf registered for gradients");

    let mut worst: f64 = 0.0;
    let mut probe = point.clone();
    for &i in coords {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + step;
        let fp = eval_scalar(&build, &probe)?;
        probe.data_mut()[i] = orig - step;
        let fm = eval_scalar(&build, &probe)?;
        probe.data_mut()[i] = orig;
        let central = (fp - fm) / (2.0 * step);
        if !central.is_finite() {
            return Err(TensorError::NonFinite(format!("central difference at coordinate {i}")));
        }
        let rel = (analytic.data()[i] - central).abs() / central.abs().max(1.0);
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// Max relative error between analytic and central-difference gradients,
/// over every coordinate of `point`:
/// `|analytic - cd| / max(1, |cd|)`.
pub fn grad_check<F>(build: F, point: &Tensor, step: f64) -> Result<f64>
where
    F: Fn(&mut Tape, NodeId) -> Result<NodeId>,
{
    let coords: Vec<usize> = (0..point.elems()).collect();
    check_coords(build, point, step, &coords)
}

/// Like [`grad_check`] but probes at most `max_coords` coordinates chosen
/// uniformly without replacement, for graphs too large to sweep fully.
pub fn grad_check_sampled<F>(build: F, point: &Tensor, step: f64, max_coords: usize, seed: u64) -> Result<f64>
where
    F: Fn(&mut Tape, NodeId) -> Result<NodeId>,
{
    let n = point.elems();
    if n <= max_coords {
        return grad_check(build, point, step);
    }
    let mut rng = Rng::new(seed);
    let coords = rng.sample_indices(n, max_coords);
    check_coords(build, point, step, &coords)
}
