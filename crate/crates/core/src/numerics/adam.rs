//! Adam with bias correction and decoupled weight decay.

use serde::{Deserialize, Serialize};

use super::NumericsError;

/// Optimizer constants. The defaults are the standard Adam settings; weight
/// decay is decoupled (applied to the parameter directly, not via the
/// gradient moments).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
    pub weight_decay: f32,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

impl AdamConfig {
    pub fn with_weight_decay(weight_decay: f32) -> Self {
        AdamConfig {
            weight_decay,
            ..Default::default()
        }
    }
}

/// Per-parameter first/second moment state. Moments are zero-initialized and
/// `step_count` advances by exactly one per `step` call.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub config: AdamConfig,
    pub step_count: u64,
    moments: Vec<Moment>,
}

#[derive(Debug, Clone)]
struct Moment {
    name: String,
    m: Vec<f32>,
    v: Vec<f32>,
}

impl OptimizerState {
    /// `params` supplies (name, element count) in the order later passed to `step`.
    pub fn new(config: AdamConfig, params: impl IntoIterator<Item = (String, usize)>) -> Self {
        let moments = params
            .into_iter()
            .map(|(name, len)| Moment {
                name,
                m: vec![0.0; len],
                v: vec![0.0; len],
            })
            .collect();
        OptimizerState {
            config,
            step_count: 0,
            moments,
        }
    }

    /// One Adam step over all parameters. `pairs` must match the construction
    /// order; each entry is (parameter values, gradient).
    pub fn step(
        &mut self,
        pairs: &mut [(&mut [f32], &[f32])],
        lr: f32,
    ) -> Result<(), NumericsError> {
        assert_eq!(pairs.len(), self.moments.len(), "parameter count changed");
        for ((param, grad), moment) in pairs.iter().zip(&self.moments) {
            assert_eq!(param.len(), moment.m.len(), "shape changed for {}", moment.name);
            assert_eq!(grad.len(), moment.m.len(), "grad shape for {}", moment.name);
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(NumericsError::NonFiniteGradient {
                    param: moment.name.clone(),
                });
            }
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let AdamConfig {
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        for ((param, grad), moment) in pairs.iter_mut().zip(self.moments.iter_mut()) {
            if weight_decay != 0.0 {
                for p in param.iter_mut() {
                    *p -= lr * weight_decay * *p;
                }
            }
            for (((p, &g), m), v) in param
                .iter_mut()
                .zip(grad.iter())
                .zip(moment.m.iter_mut())
                .zip(moment.v.iter_mut())
            {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *p -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
