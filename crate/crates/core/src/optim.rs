//! Adam with bias-corrected moment estimates.
//!
//! ```text
//! m ← β1·m + (1−β1)·g
//! v ← β2·v + (1−β2)·g²
//! m̂ = m / (1−β1^t),  v̂ = v / (1−β2^t)
//! θ ← θ − α·m̂ / (√v̂ + ε)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub bias_correction: bool,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            bias_correction: true,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!(
                "adam needs learning_rate > 0, 0 <= beta < 1, epsilon > 0 (got {self:?})"
            )))
        }
    }
}

/// Moment estimates for a list of parameter groups.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    config: AdamConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

impl Adam {
    pub fn new(config: AdamConfig) -> Result<Self> {
        config.validate()?;
        Ok(Adam {
            config,
            m: Vec::new(),
            v: Vec::new(),
            t: 0,
        })
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn first_moments(&self) -> &[Vec<f64>] {
        &self.m
    }

    pub fn second_moments(&self) -> &[Vec<f64>] {
        &self.v
    }

    /// One update of each `(params, grads)` group. Moments are allocated on
    /// the first call; later calls must pass groups of the same sizes.
    pub fn step_slices(&mut self, groups: &mut [(&mut [f64], &[f64])]) -> Result<()> {
        if self.m.is_empty() {
            self.m = groups.iter().map(|(p, _)| vec![0.0; p.len()]).collect();
            self.v = self.m.clone();
        }
        if groups.len() != self.m.len() {
            return Err(Error::Shape(format!(
                "adam state holds {} groups, step got {}",
                self.m.len(),
                groups.len()
            )));
        }
        for (i, (p, g)) in groups.iter().enumerate() {
            if p.len() != g.len() || p.len() != self.m[i].len() {
                return Err(Error::Shape(format!("adam group {i} changed size")));
            }
            if let Some(k) = g.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("gradient group {i} entry {k}")));
            }
        }

        self.t += 1;
        let AdamConfig {
            learning_rate: alpha,
            beta1,
            beta2,
            epsilon,
            bias_correction,
        } = self.config;
        let (c1, c2) = if bias_correction {
            let t = self.t as i32;
            (1.0 - beta1.powi(t), 1.0 - beta2.powi(t))
        } else {
            (1.0, 1.0)
        };
        for ((p, g), (m, v)) in groups
            .iter_mut()
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for k in 0..p.len() {
                let gk = g[k];
                m[k] = beta1 * m[k] + (1.0 - beta1) * gk;
                v[k] = beta2 * v[k] + (1.0 - beta2) * gk * gk;
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                p[k] -= alpha * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }

    /// Updates tensors from their gradient buffers.
    pub fn step(&mut self, params: &mut [&mut Tensor]) -> Result<()> {
        let mut groups: Vec<(&mut [f64], &[f64])> =
            params.iter_mut().map(|t| t.split_mut()).collect();
        self.step_slices(&mut groups)
    }
}
