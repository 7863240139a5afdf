use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Activation, DenseNet, ForwardTrace, NumericsError};

/// Feature-wise linear modulation `h' = γ(c) ⊙ h + β(c)`.
///
/// The condition network emits `[γ; β]`, so its output width is twice the
/// modulated feature width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilmLayer {
    pub condition_net: DenseNet,
}

impl FilmLayer {
    pub fn new(condition_net: DenseNet) -> Result<Self, NumericsError> {
        if !condition_net.output_dim().is_multiple_of(2) {
            return Err(NumericsError::Architecture("FiLM condition net must output [gamma; beta]"));
        }
        Ok(Self { condition_net })
    }

    /// Condition MLP `cond → hidden → 2·features`, initialised so that the
    /// modulation starts out as the identity (γ bias 1, β bias 0, small
    /// output weights).
    pub fn init<R: Rng + ?Sized>(
        condition_dim: usize,
        hidden: usize,
        feature_dim: usize,
        rng: &mut R,
    ) -> Result<Self, NumericsError> {
        let mut net = DenseNet::glorot(
            &[condition_dim, hidden, 2 * feature_dim],
            &[Activation::Relu, Activation::Identity],
            rng,
        )?;
        for w in net.weight_mut(1) {
            *w *= 0.1;
        }
        for g in &mut net.bias_mut(1)[..feature_dim] {
            *g = 1.0;
        }
        Self::new(net)
    }

    pub fn feature_dim(&self) -> usize {
        self.condition_net.output_dim() / 2
    }

    pub fn condition_dim(&self) -> usize {
        self.condition_net.input_dim()
    }

    /// `(γ, β)` for a condition vector.
    pub fn coefficients(&self, condition: &[f64]) -> Result<(Vec<f64>, Vec<f64>), NumericsError> {
        let mut out = self.condition_net.forward(condition)?;
        let beta = out.split_off(self.feature_dim());
        Ok((out, beta))
    }

    pub fn coefficients_trace(&self, condition: &[f64]) -> Result<ForwardTrace, NumericsError> {
        self.condition_net.forward_trace(condition)
    }

    pub fn modulate(&self, features: &[f64], condition: &[f64]) -> Result<Vec<f64>, NumericsError> {
        if features.len() != self.feature_dim() {
            return Err(NumericsError::DimensionMismatch {
                what: "FiLM features",
                expected: self.feature_dim(),
                got: features.len(),
            });
        }
        let (gamma, beta) = self.coefficients(condition)?;
        Ok(features.iter().zip(gamma.iter().zip(&beta)).map(|(h, (g, b))| g * h + b).collect())
    }
}
