use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::NumericsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self { learning_rate, ..Self::default() }
    }
}

/// Adam moments for a parameter vector that may be split across several
/// buffers (e.g. a policy and a critic updated by one combined step).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub config: AdamConfig,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
}

impl AdamState {
    pub fn new(param_count: usize, config: AdamConfig) -> Self {
        Self { config, first_moment: vec![0.0; param_count], second_moment: vec![0.0; param_count], step_count: 0 }
    }

    pub fn len(&self) -> usize {
        self.first_moment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first_moment.is_empty()
    }

    /// One bias-corrected Adam update. `segments` are the parameter buffers
    /// in the same order as the flat `grads`. A non-finite gradient rejects
    /// the whole update and leaves parameters and moments untouched.
    pub fn step(&mut self, segments: &mut [&mut [f64]], grads: &[f64]) -> Result<(), NumericsError> {
        let total: usize = segments.iter().map(|s| s.len()).sum();
        if total != self.len() {
            return Err(NumericsError::DimensionMismatch { what: "adam parameters", expected: self.len(), got: total });
        }
        if grads.len() != total {
            return Err(NumericsError::DimensionMismatch { what: "adam gradient", expected: total, got: grads.len() });
        }
        if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
            return Err(NumericsError::NonFiniteGradient { index });
        }

        self.step_count += 1;
        let AdamConfig { learning_rate, beta1, beta2, epsilon } = self.config;
        let t = self.step_count as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);

        let mut idx = 0;
        for seg in segments.iter_mut() {
            for p in seg.iter_mut() {
                let g = grads[idx];
                let m = &mut self.first_moment[idx];
                let v = &mut self.second_moment[idx];
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
                idx += 1;
            }
        }
        Ok(())
    }
}
