//! Adam with decoupled weight decay.

use serde::{Deserialize, Serialize};

use crate::encoder::{ModelParams, NamedTensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Applied as `w ← w·(1 − lr·decay)` to weight matrices only.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.1,
        }
    }
}

/// First and second moment estimates, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    /// Number of updates applied so far.
    pub step: u64,
    pub first: ModelParams,
    pub second: ModelParams,
}

const FIRST_PREFIX: &str = "adam.first.";
const SECOND_PREFIX: &str = "adam.second.";

impl OptimizerState {
    pub fn new(params: &ModelParams) -> Self {
        Self {
            step: 0,
            first: params.zeros_like(),
            second: params.zeros_like(),
        }
    }

    /// Moments as checkpoint side tensors; the step counter travels in the
    /// checkpoint metadata.
    pub fn to_aux(&self) -> Vec<NamedTensor> {
        let dump = |prefix: &str, p: &ModelParams| {
            p.tensors()
                .into_iter()
                .map(|t| NamedTensor {
                    name: format!("{prefix}{}", t.name),
                    shape: t.shape,
                    data: t.data.to_vec(),
                })
                .collect::<Vec<_>>()
        };
        let mut out = dump(FIRST_PREFIX, &self.first);
        out.extend(dump(SECOND_PREFIX, &self.second));
        out
    }

    /// Rebuilds the state for `params` from side tensors written by
    /// [`OptimizerState::to_aux`].
    pub fn from_aux(params: &ModelParams, aux: &[NamedTensor], step: u64) -> Result<Self> {
        let mut state = Self::new(params);
        state.step = step;
        for (prefix, target) in [(FIRST_PREFIX, &mut state.first), (SECOND_PREFIX, &mut state.second)] {
            for t in target.tensors_mut() {
                let name = format!("{prefix}{}", t.name);
                let src = aux
                    .iter()
                    .find(|a| a.name == name)
                    .ok_or_else(|| Error::ShapeMismatch(format!("optimizer state lacks {name}")))?;
                if src.shape != t.shape {
                    return Err(Error::ShapeMismatch(format!(
                        "{name}: stored {:?}, expected {:?}",
                        src.shape, t.shape
                    )));
                }
                t.data.copy_from_slice(&src.data);
            }
        }
        Ok(state)
    }
}

/// One update of a flat parameter group. `t` is the 1-based update count
/// used for bias correction.
#[allow(clippy::too_many_arguments)]
pub fn adam_update_slice(
    params: &mut [f64],
    grads: &[f64],
    first: &mut [f64],
    second: &mut [f64],
    t: u64,
    lr: f64,
    config: &AdamConfig,
    decay: bool,
) {
    let c1 = 1.0 - config.beta1.powi(t as i32);
    let c2 = 1.0 - config.beta2.powi(t as i32);
    let shrink = if decay { 1.0 - lr * config.weight_decay } else { 1.0 };
    for (((w, &g), m), v) in params.iter_mut().zip(grads).zip(first).zip(second) {
        *m = config.beta1 * *m + (1.0 - config.beta1) * g;
        *v = config.beta2 * *v + (1.0 - config.beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *w = *w * shrink - lr * m_hat / (v_hat.sqrt() + config.epsilon);
    }
}

/// Applies one Adam step to every tensor. Nothing is modified if any
/// gradient is non-finite.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &ModelParams,
    state: &mut OptimizerState,
    lr: f64,
    config: &AdamConfig,
) -> Result<()> {
    if !params.same_structure(grads) || !params.same_structure(&state.first) {
        return Err(Error::ShapeMismatch(
            "parameters, gradients and optimizer state differ in structure".into(),
        ));
    }
    let grad_tensors = grads.tensors();
    if let Some(bad) = grad_tensors.iter().find(|g| g.data.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFiniteGradient(bad.name.clone()));
    }
    state.step += 1;
    let t = state.step;
    let firsts = state.first.tensors_mut();
    let seconds = state.second.tensors_mut();
    for (((p, g), m), v) in params.tensors_mut().into_iter().zip(&grad_tensors).zip(firsts).zip(seconds) {
        adam_update_slice(p.data, g.data, m.data, v.data, t, lr, config, p.kind.decays());
    }
    Ok(())
}
