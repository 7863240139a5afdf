use alloc::vec;
use alloc::vec::Vec;

use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::NoiseRlError;
use crate::numerics::{Activation, DenseNet, ForwardTrace, NumericsError};
use crate::seed::Rng;

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// `½·ln(2π)`.
const HALF_LN_TAU: f64 = 0.918_938_533_204_672_8;

/// Diagonal Gaussian `N(μ(s), diag(exp(2·log_std)))` with a state-dependent
/// mean and a state-independent, clamped log standard deviation.
///
/// Parameters are laid out as the mean network's followed by `log_std`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPolicy {
    pub mean_net: DenseNet,
    log_std: Vec<f64>,
}

impl GaussianPolicy {
    pub fn new(mean_net: DenseNet, log_std: Vec<f64>) -> Result<Self, NoiseRlError> {
        if log_std.len() != mean_net.output_dim() {
            return Err(NumericsError::DimensionMismatch {
                what: "log_std",
                expected: mean_net.output_dim(),
                got: log_std.len(),
            }
            .into());
        }
        if log_std.iter().any(|v| !v.is_finite()) {
            return Err(NoiseRlError::NonFinite("log_std"));
        }
        let mut p = Self { mean_net, log_std };
        p.clamp_log_std();
        Ok(p)
    }

    /// Tanh MLP `obs → hidden… → dim` whose last layer is scaled by
    /// `output_scale`, so the initial mean sits near zero.
    pub fn init(
        obs_dim: usize,
        hidden: &[usize],
        dim: usize,
        output_scale: f64,
        log_std: f64,
        rng: &mut Rng,
    ) -> Result<Self, NoiseRlError> {
        let mut dims = vec![obs_dim];
        dims.extend_from_slice(hidden);
        dims.push(dim);
        let mut acts = vec![Activation::Tanh; hidden.len()];
        acts.push(Activation::Identity);
        let mut mean_net = DenseNet::glorot(&dims, &acts, rng)?;
        let last = mean_net.layer_count() - 1;
        for w in mean_net.weight_mut(last) {
            *w *= output_scale;
        }
        Self::new(mean_net, vec![log_std; dim])
    }

    pub fn dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn obs_dim(&self) -> usize {
        self.mean_net.input_dim()
    }

    pub fn log_std(&self) -> &[f64] {
        &self.log_std
    }

    pub fn log_std_mut(&mut self) -> &mut [f64] {
        &mut self.log_std
    }

    /// Projects `log_std` back into `[LOG_STD_MIN, LOG_STD_MAX]`.
    pub fn clamp_log_std(&mut self) {
        for v in &mut self.log_std {
            *v = v.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
    }

    pub fn param_count(&self) -> usize {
        self.mean_net.param_count() + self.log_std.len()
    }

    pub fn mean(&self, obs: &[f64]) -> Result<Vec<f64>, NoiseRlError> {
        Ok(self.mean_net.forward(obs)?)
    }

    /// `w = μ(s) + exp(log_std) ⊙ ξ` with `ξ` standard normal, and its log density.
    pub fn sample(&self, obs: &[f64], rng: &mut Rng) -> Result<(Vec<f64>, f64), NoiseRlError> {
        let mean = self.mean(obs)?;
        let w: Vec<f64> = mean
            .iter()
            .zip(&self.log_std)
            .map(|(m, ls)| {
                let xi: f64 = rng.sample(StandardNormal);
                m + ls.exp() * xi
            })
            .collect();
        let lp = self.log_prob_given_mean(&mean, &w);
        Ok((w, lp))
    }

    pub fn log_prob(&self, obs: &[f64], w: &[f64]) -> Result<f64, NoiseRlError> {
        if w.len() != self.dim() {
            return Err(
                NumericsError::DimensionMismatch { what: "noise sample", expected: self.dim(), got: w.len() }.into()
            );
        }
        Ok(self.log_prob_given_mean(&self.mean(obs)?, w))
    }

    /// Diagonal-Gaussian log density of `w` around `mean`.
    pub fn log_prob_given_mean(&self, mean: &[f64], w: &[f64]) -> f64 {
        mean.iter()
            .zip(w)
            .zip(&self.log_std)
            .map(|((m, x), ls)| {
                let z = (x - m) * (-ls).exp();
                -0.5 * z * z - ls - HALF_LN_TAU
            })
            .sum()
    }

    /// `Σ log_std + (D/2)(1 + ln 2π)`.
    pub fn entropy(&self) -> f64 {
        let d = self.dim() as f64;
        self.log_std.iter().sum::<f64>() + 0.5 * d * (1.0 + (2.0 * PI).ln())
    }

    pub fn trace(&self, obs: &[f64]) -> Result<ForwardTrace, NoiseRlError> {
        Ok(self.mean_net.forward_trace(obs)?)
    }

    /// Accumulates `coeff · ∇ log π(w|s)` into `grads` (length
    /// `param_count`) given the mean network's trace at `s`.
    pub fn accumulate_log_prob_grad(
        &self,
        trace: &ForwardTrace,
        w: &[f64],
        coeff: f64,
        grads: &mut [f64],
    ) -> Result<(), NoiseRlError> {
        let mean = trace.output().ok_or(NumericsError::NotCached)?;
        let (g_net, g_std) = grads.split_at_mut(self.mean_net.param_count());
        let mut d_mean = vec![0.0; self.dim()];
        for i in 0..self.dim() {
            let inv_var = (-2.0 * self.log_std[i]).exp();
            let diff = w[i] - mean[i];
            d_mean[i] = coeff * diff * inv_var;
            g_std[i] += coeff * (diff * diff * inv_var - 1.0);
        }
        self.mean_net.backward(trace, &d_mean, g_net)?;
        Ok(())
    }

    pub fn param_segments_mut(&mut self) -> [&mut [f64]; 2] {
        [self.mean_net.params_mut(), &mut self.log_std]
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.mean_net.params().iter().chain(&self.log_std)
    }
}

/// State-value critic `V(s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueNet {
    pub net: DenseNet,
}

impl ValueNet {
    pub fn new(net: DenseNet) -> Result<Self, NoiseRlError> {
        if net.output_dim() != 1 {
            return Err(NumericsError::Architecture("value network must output a scalar").into());
        }
        Ok(Self { net })
    }

    pub fn init(obs_dim: usize, hidden: &[usize], rng: &mut Rng) -> Result<Self, NoiseRlError> {
        let mut dims = vec![obs_dim];
        dims.extend_from_slice(hidden);
        dims.push(1);
        let mut acts = vec![Activation::Tanh; hidden.len()];
        acts.push(Activation::Identity);
        Self::new(DenseNet::glorot(&dims, &acts, rng)?)
    }

    pub fn obs_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn param_count(&self) -> usize {
        self.net.param_count()
    }

    pub fn value(&self, obs: &[f64]) -> Result<f64, NoiseRlError> {
        Ok(self.net.forward(obs)?[0])
    }
}
