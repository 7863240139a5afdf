use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{MeanFlowError, VelocityNet};
use crate::dataset::Dataset;
use crate::numerics::{AdamConfig, AdamState, DerivativeMode};
use crate::seed::{self, tag, Rng};

/// Probability that a sampled pair has `r = t`.
pub const BOUNDARY_FRACTION: f64 = 0.75;

/// One draw of the linear noising path.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSample {
    pub eps: Vec<f64>,
    pub r: f64,
    pub t: f64,
    /// `z_t = (1 − t)·a + t·ε`.
    pub z: Vec<f64>,
    /// `v = ε − a`.
    pub v: Vec<f64>,
}

/// `t ~ U(0, 1)`; `r = t` with probability [`BOUNDARY_FRACTION`], else `r ~ U(0, t)`.
pub fn sample_times(rng: &mut Rng) -> (f64, f64) {
    let t: f64 = rng.random();
    let r = if rng.random_bool(BOUNDARY_FRACTION) { t } else { rng.random::<f64>() * t };
    (r, t)
}

pub fn flow_sample(action: &[f64], rng: &mut Rng) -> FlowSample {
    let eps: Vec<f64> = (0..action.len()).map(|_| rng.sample(StandardNormal)).collect();
    let (r, t) = sample_times(rng);
    flow_sample_at(action, eps, r, t)
}

pub fn flow_sample_at(action: &[f64], eps: Vec<f64>, r: f64, t: f64) -> FlowSample {
    let z = action.iter().zip(&eps).map(|(a, e)| (1.0 - t) * a + t * e).collect();
    let v = action.iter().zip(&eps).map(|(a, e)| e - a).collect();
    FlowSample { eps, r, t, z, v }
}

/// Regression target `v − (t − r)·du/dt` of the MeanFlow identity. It is a
/// plain value: nothing downstream differentiates through it.
pub fn meanflow_target(
    net: &VelocityNet,
    sample: &FlowSample,
    cond: &[f64],
    mode: DerivativeMode,
) -> Result<Vec<f64>, MeanFlowError> {
    let du = net.total_derivative(&sample.z, sample.r, sample.t, cond, &sample.v, mode)?;
    let gap = sample.t - sample.r;
    Ok(sample.v.iter().zip(&du).map(|(v, d)| v - gap * d).collect())
}

/// Normalized conditions and action chunks, flattened for batch assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub cond_dim: usize,
    pub action_dim: usize,
    conds: Vec<f64>,
    actions: Vec<f64>,
}

impl TrainingSet {
    pub fn new(cond_dim: usize, action_dim: usize, conds: Vec<f64>, actions: Vec<f64>) -> Self {
        assert!(cond_dim > 0 && action_dim > 0);
        assert_eq!(conds.len() % cond_dim, 0);
        assert_eq!(conds.len() / cond_dim, actions.len() / action_dim);
        assert_eq!(actions.len() % action_dim, 0);
        Self { cond_dim, action_dim, conds, actions }
    }

    /// Standardized windows and normalized chunks of every record.
    pub fn from_dataset(ds: &Dataset) -> Self {
        let (cd, ad) = (ds.horizons.obs_len(), ds.horizons.chunk_len());
        let mut conds = Vec::with_capacity(ds.records.len() * cd);
        let mut actions = Vec::with_capacity(ds.records.len() * ad);
        for r in &ds.records {
            let start = conds.len();
            conds.extend_from_slice(&r.window);
            ds.stats.normalize_obs_in_place(&mut conds[start..]);
            actions.extend_from_slice(&r.chunk);
        }
        Self::new(cd, ad, conds, actions)
    }

    pub fn len(&self) -> usize {
        self.actions.len() / self.action_dim
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn cond(&self, i: usize) -> &[f64] {
        &self.conds[i * self.cond_dim..(i + 1) * self.cond_dim]
    }

    pub fn action(&self, i: usize) -> &[f64] {
        &self.actions[i * self.action_dim..(i + 1) * self.action_dim]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Use forward-mode tangents (true) or central differences for du/dt.
    pub forward_mode: bool,
    /// Anneal the learning rate to zero on a half cosine over `steps`.
    pub cosine_decay: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { steps: 5000, batch_size: 64, learning_rate: 3e-3, forward_mode: true, cosine_decay: true }
    }
}

/// Optimizer, sampling stream and gradient scratch for MeanFlow training.
#[derive(Debug, Clone)]
pub struct MeanFlowTrainer {
    adam: AdamState,
    rng: Rng,
    grads: Vec<f64>,
    mode: DerivativeMode,
    batch_size: usize,
    base_rate: f64,
    decay_steps: Option<usize>,
}

impl MeanFlowTrainer {
    pub fn new(net: &VelocityNet, config: &TrainConfig, seed: u64) -> Self {
        Self {
            adam: AdamState::new(net.param_count(), AdamConfig::with_learning_rate(config.learning_rate)),
            rng: seed::derived_rng(seed, tag::TRAIN, 0),
            grads: vec![0.0; net.param_count()],
            mode: if config.forward_mode { DerivativeMode::ForwardMode } else { DerivativeMode::FiniteDifference },
            batch_size: config.batch_size.max(1),
            base_rate: config.learning_rate,
            decay_steps: config.cosine_decay.then_some(config.steps.max(1)),
        }
    }

    /// Learning rate applied at optimizer step `step`.
    pub fn learning_rate_at(&self, step: u64) -> f64 {
        match self.decay_steps {
            Some(n) => {
                let progress = (step as f64 / n as f64).min(1.0);
                0.5 * self.base_rate * (1.0 + (core::f64::consts::PI * progress).cos())
            }
            None => self.base_rate,
        }
    }

    /// Loss and parameter gradient (into the internal buffer) on the given
    /// examples, drawing fresh noise and times from the trainer's stream.
    fn loss_and_grad(&mut self, net: &VelocityNet, set: &TrainingSet, batch: &[usize]) -> Result<f64, MeanFlowError> {
        self.grads.fill(0.0);
        let scale = 1.0 / (batch.len() * set.action_dim) as f64;
        let mut loss = 0.0;
        let mut out_grad = vec![0.0; set.action_dim];
        for &i in batch {
            let cond = set.cond(i);
            let sample = flow_sample(set.action(i), &mut self.rng);
            let trace = net.trace(&sample.z, sample.r, sample.t, cond)?;
            let du = match self.mode {
                DerivativeMode::ForwardMode => net.tangent(&trace, &sample.v, 0.0, 1.0)?,
                DerivativeMode::FiniteDifference => {
                    net.total_derivative(&sample.z, sample.r, sample.t, cond, &sample.v, self.mode)?
                }
            };
            let gap = sample.t - sample.r;
            for (k, ((u, v), d)) in trace.output().iter().zip(&sample.v).zip(&du).enumerate() {
                let residual = u - (v - gap * d);
                loss += residual * residual;
                out_grad[k] = 2.0 * residual * scale;
            }
            net.backward(&trace, &out_grad, &mut self.grads)?;
        }
        Ok(loss * scale)
    }

    /// One Adam update on a uniformly drawn minibatch. Returns the batch loss
    /// measured before the update. A non-finite loss leaves the network
    /// untouched and is reported as an error.
    pub fn train_step(&mut self, net: &mut VelocityNet, set: &TrainingSet) -> Result<f64, MeanFlowError> {
        if set.is_empty() {
            return Err(MeanFlowError::EmptyDataset);
        }
        let batch: Vec<usize> = (0..self.batch_size).map(|_| self.rng.random_range(0..set.len())).collect();
        let loss = self.loss_and_grad(net, set, &batch)?;
        if !loss.is_finite() {
            return Err(MeanFlowError::NonFiniteLoss);
        }
        self.adam.config.learning_rate = self.learning_rate_at(self.adam.step_count);
        let mut segments = net.param_segments_mut();
        self.adam.step(&mut segments, &self.grads)?;
        Ok(loss)
    }

    pub fn steps_taken(&self) -> u64 {
        self.adam.step_count
    }
}

/// Runs `config.steps` training steps and returns the per-step losses.
/// Steps with a non-finite loss are skipped and recorded as NaN.
pub fn train(
    net: &mut VelocityNet,
    set: &TrainingSet,
    config: &TrainConfig,
    seed: u64,
    mut on_step: impl FnMut(usize, f64),
) -> Result<Vec<f64>, MeanFlowError> {
    let mut trainer = MeanFlowTrainer::new(net, config, seed);
    let mut losses = Vec::with_capacity(config.steps);
    for step in 0..config.steps {
        let loss = match trainer.train_step(net, set) {
            Ok(l) => l,
            Err(MeanFlowError::NonFiniteLoss) => {
                log::warn!("step {step}: non-finite loss, update skipped");
                f64::NAN
            }
            Err(e) => return Err(e),
        };
        on_step(step, loss);
        losses.push(loss);
    }
    Ok(losses)
}
