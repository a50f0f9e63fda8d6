//! ADAM with bias-corrected moments.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{CoreError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
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

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    config: AdamConfig,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    /// Zeroed moments for tensors of the given lengths.
    pub fn new(shapes: &[usize], lr: f64) -> Result<Self> {
        Self::with_config(
            shapes,
            AdamConfig {
                lr,
                ..AdamConfig::default()
            },
        )
    }

    pub fn with_config(shapes: &[usize], config: AdamConfig) -> Result<Self> {
        if shapes.is_empty() {
            return Err(CoreError::InvalidArgument(
                "ADAM needs at least one parameter tensor",
            ));
        }
        if !(config.lr > 0.0 && config.lr.is_finite()) {
            return Err(CoreError::InvalidArgument(
                "learning rate must be positive and finite",
            ));
        }
        Ok(Adam {
            config,
            t: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        })
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn lr(&self) -> f64 {
        self.config.lr
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

    /// One update. Nothing is modified if any gradient entry is non-finite.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(CoreError::ShapeMismatch {
                what: "ADAM tensor count",
                expected: self.m.len(),
                found: params.len().min(grads.len()),
            });
        }
        for (t, ((p, g), m)) in params.iter().zip(grads).zip(&self.m).enumerate() {
            if p.len() != m.len() || g.len() != m.len() {
                return Err(CoreError::ShapeMismatch {
                    what: "ADAM tensor length",
                    expected: m.len(),
                    found: if p.len() != m.len() { p.len() } else { g.len() },
                });
            }
            if let Some(index) = g.iter().position(|v| !v.is_finite()) {
                return Err(CoreError::NonFiniteGradient { tensor: t, index });
            }
        }
        self.t += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.t as f64;
        let c1 = 1.0 - libm::pow(beta1, t);
        let c2 = 1.0 - libm::pow(beta2, t);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (libm::sqrt(v_hat) + eps);
            }
        }
        Ok(())
    }
}
