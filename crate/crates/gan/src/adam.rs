//! Bias-corrected Adam.

use std::collections::BTreeMap;

use ganforge_core::Tensor;
use serde::{Deserialize, Serialize};

use crate::error::{GanError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams { lr: 2e-4, beta1: 0.5, beta2: 0.999, eps: 1e-8 }
    }
}

impl AdamParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0;
        if !ok {
            return Err(GanError::Invalid(format!("bad Adam hyperparameters: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct AdamState {
    pub m: Tensor,
    pub v: Tensor,
    pub t: u64,
}

impl AdamState {
    pub fn new(shape: &[usize]) -> Self {
        AdamState { m: Tensor::zeros(shape), v: Tensor::zeros(shape), t: 0 }
    }
}

/// One Adam update: first/second moments with bias correction, epsilon
/// added after the square root. Rejects non-finite gradients, naming the
/// parameter.
pub fn adam_step(
    name: &str,
    param: &mut Tensor,
    grad: &Tensor,
    state: &mut AdamState,
    hp: &AdamParams,
) -> Result<()> {
    hp.validate()?;
    if grad.shape() != param.shape() {
        return Err(GanError::Invalid(format!(
            "gradient shape {:?} does not match parameter {name} {:?}",
            grad.shape(),
            param.shape()
        )));
    }
    grad.validate_finite(&format!("gradient of {name}"))
        .map_err(GanError::Tensor)?;
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - hp.beta1.powi(t);
    let bc2 = 1.0 - hp.beta2.powi(t);
    let (m, v, p) = (state.m.data_mut(), state.v.data_mut(), param.data_mut());
    for ((mi, vi), (pi, &gi)) in m.iter_mut().zip(v.iter_mut()).zip(p.iter_mut().zip(grad.data())) {
        *mi = hp.beta1 * *mi + (1.0 - hp.beta1) * gi;
        *vi = hp.beta2 * *vi + (1.0 - hp.beta2) * gi * gi;
        let mhat = *mi / bc1;
        let vhat = *vi / bc2;
        *pi -= hp.lr * mhat / (vhat.sqrt() + hp.eps);
    }
    Ok(())
}

/// Adam over a named parameter map; states are created on first touch.
#[derive(Clone, Debug)]
pub struct Optimizer {
    pub hp: AdamParams,
    pub states: BTreeMap<String, AdamState>,
}

impl Optimizer {
    pub fn new(hp: AdamParams) -> Self {
        Optimizer { hp, states: BTreeMap::new() }
    }

    pub fn step(&mut self, params: &mut BTreeMap<String, Tensor>, grads: &BTreeMap<String, Tensor>) -> Result<()> {
        for (name, grad) in grads {
            let param = params
                .get_mut(name)
                .ok_or_else(|| GanError::Invalid(format!("gradient for unknown parameter {name}")))?;
            let state = self
                .states
                .entry(name.clone())
                .or_insert_with(|| AdamState::new(param.shape()));
            adam_step(name, param, grad, state, &self.hp)?;
        }
        Ok(())
    }

    /// Steps taken so far (zero until the first update).
    pub fn steps(&self) -> u64 {
        self.states.values().map(|s| s.t).max().unwrap_or(0)
    }
}
