//! Adam optimizer with bias-corrected moment estimates.

use crate::error::{Error, Result};

use super::model::{ModelConfig, ParamSet};

/// Training hyperparameters. The published setup uses a learning rate of
/// 1e-3 and batches of 290; Adam moments follow its standard defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Weight examples by inverse class frequency in the loss. Off by
    /// default: the plain unweighted loss matches the published training.
    pub class_weighting: bool,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 290,
            epochs: 50,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            class_weighting: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be >= 1".into()));
        }
        for (name, value) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&value) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must lie in [0, 1), got {value}"
                )));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// First and second moment estimates, shaped like the parameter set, plus
/// the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

impl AdamState {
    pub fn new(config: &ModelConfig) -> AdamState {
        let zeros = ParamSet::zeros(config);
        let m: Vec<Vec<f64>> = zeros.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        AdamState {
            v: m.clone(),
            m,
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One Adam update:
///
/// ```text
/// t <- t + 1
/// m <- beta1 m + (1 - beta1) g
/// v <- beta2 v + (1 - beta2) g^2
/// theta <- theta - lr * (m / (1 - beta1^t)) / (sqrt(v / (1 - beta2^t)) + eps)
/// ```
///
/// A non-finite gradient rejects the whole step and leaves the parameters
/// and state untouched.
pub fn adam_step(
    params: &mut ParamSet,
    grads: &ParamSet,
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<()> {
    cfg.validate()?;
    let names = ParamSet::tensor_names();
    let grad_tensors = grads.tensors();
    {
        let param_tensors = params.tensors();
        if grad_tensors.len() != state.m.len() || param_tensors.len() != grad_tensors.len() {
            return Err(Error::ShapeMismatch(
                "optimizer state does not match the parameter set".into(),
            ));
        }
        for ((g, p), (s, name)) in grad_tensors
            .iter()
            .zip(&param_tensors)
            .zip(state.m.iter().zip(&names))
        {
            if g.len() != p.len() || g.len() != s.len() {
                return Err(Error::ShapeMismatch(format!(
                    "tensor {name} sizes disagree between params, grads, and state"
                )));
            }
            if g.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteGradient {
                    tensor: name.clone(),
                });
            }
        }
    }

    state.t += 1;
    let bc1 = 1.0 - cfg.beta1.powi(state.t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(state.t as i32);
    for (((theta, g), m), v) in params
        .tensors_mut()
        .into_iter()
        .zip(grad_tensors)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        for j in 0..theta.len() {
            let gj = g[j];
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * gj;
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * gj * gj;
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            theta[j] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}
