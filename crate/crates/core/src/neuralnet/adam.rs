use serde::{Deserialize, Serialize};

use super::ModelParameters;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Applied,
    /// A gradient entry was NaN or infinite; nothing changed.
    SkippedNonFinite,
}

/// Adam with bias correction. Moments are stored per tensor in the order of
/// [`ModelParameters::tensors`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub config: AdamConfig,
    pub step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &ModelParameters) -> Self {
        let zeros: Vec<Vec<f64>> = params
            .tensors()
            .iter()
            .map(|t| vec![0.0; t.len()])
            .collect();
        Adam {
            config,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn update(
        &mut self,
        params: &mut ModelParameters,
        grads: &ModelParameters,
    ) -> Result<StepOutcome> {
        let grads = grads.tensors();
        let mut targets = params.tensors_mut();
        if grads.len() != self.first.len()
            || targets.len() != self.first.len()
            || grads
                .iter()
                .zip(&self.first)
                .any(|(g, m)| g.len() != m.len())
        {
            return Err(Error::Shape(
                "gradient layout does not match optimizer state".into(),
            ));
        }
        if grads.iter().any(|g| g.iter().any(|x| !x.is_finite())) {
            return Ok(StepOutcome::SkippedNonFinite);
        }

        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for (((param, grad), m), v) in targets
            .iter_mut()
            .zip(&grads)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            for i in 0..param.len() {
                let g = grad[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                param[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(StepOutcome::Applied)
    }
}
