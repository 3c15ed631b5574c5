use serde::{Deserialize, Serialize};

use super::tape::{Gradients, ParamId, ParamStore};
use super::tensor::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment estimates for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub s: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            s: vec![0.0; len],
            step: 0,
        }
    }
}

/// One bias-corrected Adam update of `param` in place.
///
/// `name` only feeds the error message when the gradient is not finite.
#[allow(clippy::too_many_arguments)]
pub fn adam_step(
    param: &mut Tensor,
    grad: &Tensor,
    state: &mut AdamState,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    name: &str,
) -> Result<()> {
    if param.shape() != grad.shape() {
        return Err(Error::Dimension(format!(
            "adam step on `{name}`: parameter {:?} vs gradient {:?}",
            param.shape(),
            grad.shape()
        )));
    }
    if !(lr > 0.0) {
        return Err(Error::Argument(format!(
            "learning rate must be positive, got {lr}"
        )));
    }
    if !grad.is_finite() {
        return Err(Error::Optimization {
            param: name.to_string(),
            reason: "non-finite gradient".into(),
        });
    }
    if state.m.len() != param.len() {
        *state = AdamState::new(param.len());
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for (((p, &g), m), s) in param
        .data_mut()
        .iter_mut()
        .zip(grad.data())
        .zip(state.m.iter_mut())
        .zip(state.s.iter_mut())
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *s = beta2 * *s + (1.0 - beta2) * g * g;
        let m_hat = *m / c1;
        let s_hat = *s / c2;
        *p -= lr * m_hat / (s_hat.sqrt() + eps);
    }
    Ok(())
}

/// Adam over every tensor of a [`ParamStore`].
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    states: Vec<AdamState>,
}

impl Adam {
    pub fn new(config: AdamConfig, store: &ParamStore) -> Self {
        let states = store
            .ids()
            .map(|id| AdamState::new(store.get(id).len()))
            .collect();
        Self { config, states }
    }

    pub fn state(&self, id: ParamId) -> &AdamState {
        &self.states[id.0]
    }

    /// Updates every parameter that has a gradient entry.
    pub fn step(&mut self, store: &mut ParamStore, grads: &Gradients) -> Result<()> {
        let c = self.config;
        for id in store.ids().collect::<Vec<_>>() {
            let Some(g) = grads.get(id) else { continue };
            let name = store.name(id).to_string();
            adam_step(
                store.get_mut(id),
                g,
                &mut self.states[id.0],
                c.lr,
                c.beta1,
                c.beta2,
                c.eps,
                &name,
            )?;
        }
        Ok(())
    }
}
