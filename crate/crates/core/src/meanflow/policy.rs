use alloc::boxed::Box;
use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::StandardNormal;

use super::{Horizons, MeanFlowError, VelocityNet, ACTION_DIM};
use crate::dataset::NormStats;
use crate::market::{MarketState, ObservationWindow, QuoteAction, ScenarioConfig};
use crate::seed::{self, tag, Rng};
use crate::strategy::{QuotingStrategy, StrategyError};

/// A frozen velocity network with the normalization and horizons it was
/// trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFlowPolicy {
    net: VelocityNet,
    stats: NormStats,
    horizons: Horizons,
}

impl MeanFlowPolicy {
    pub fn new(net: VelocityNet, stats: NormStats, horizons: Horizons) -> Result<Self, MeanFlowError> {
        horizons.validate()?;
        if net.noise_dim() != horizons.chunk_len() || net.cond_dim() != horizons.obs_len() {
            return Err(MeanFlowError::Horizons("network dimensions do not match the horizons"));
        }
        Ok(Self { net, stats, horizons })
    }

    pub fn net(&self) -> &VelocityNet {
        &self.net
    }

    pub fn stats(&self) -> &NormStats {
        &self.stats
    }

    pub fn horizons(&self) -> &Horizons {
        &self.horizons
    }

    /// Standardized copy of a raw flattened window.
    pub fn condition(&self, raw_window: &[f64]) -> Vec<f64> {
        self.stats.normalize_obs(raw_window)
    }

    /// `clip(w − u(w, r = 0, t = 1 | s), −1, 1)` in normalized units.
    pub fn generate_normalized(&self, w: &[f64], cond: &[f64]) -> Result<Vec<f64>, MeanFlowError> {
        let u = self.net.forward(w, 0.0, 1.0, cond)?;
        Ok(w.iter().zip(&u).map(|(w, u)| (w - u).clamp(-1.0, 1.0)).collect())
    }

    /// One-step chunk in spread units from noise `w` and a raw window.
    pub fn generate_chunk(&self, w: &[f64], raw_window: &[f64]) -> Result<Vec<f64>, MeanFlowError> {
        let mut chunk = self.generate_normalized(w, &self.condition(raw_window))?;
        self.stats.unnormalize_actions_in_place(&mut chunk);
        Ok(chunk)
    }

    /// Executed slice of an unnormalized chunk as quotes, floored at zero.
    pub fn exec_actions<'a>(&'a self, chunk: &'a [f64]) -> impl Iterator<Item = QuoteAction> + 'a {
        chunk[self.horizons.exec_rows().start * ACTION_DIM..self.horizons.exec_rows().end * ACTION_DIM]
            .chunks_exact(ACTION_DIM)
            .map(|row| QuoteAction::new(row[0].max(0.0), row[1].max(0.0)))
    }
}

/// Where the generator's input noise comes from at each decision.
pub trait NoiseSource: Send {
    fn begin_episode(&mut self, seed: u64);

    /// Fills `out` (the chunk length) given the standardized window.
    fn noise(&mut self, cond: &[f64], out: &mut [f64]);

    fn fork(&self) -> Box<dyn NoiseSource>;
}

/// Standard normal noise, reseeded every episode.
#[derive(Debug, Clone)]
pub struct GaussianNoise {
    rng: Rng,
}

impl Default for GaussianNoise {
    fn default() -> Self {
        Self { rng: seed::rng(0) }
    }
}

impl NoiseSource for GaussianNoise {
    fn begin_episode(&mut self, seed: u64) {
        self.rng = seed::derived_rng(seed, tag::STRATEGY, 1);
    }

    fn noise(&mut self, _cond: &[f64], out: &mut [f64]) {
        for v in out {
            *v = self.rng.sample(StandardNormal);
        }
    }

    fn fork(&self) -> Box<dyn NoiseSource> {
        Box::new(Self::default())
    }
}

/// Receding-horizon execution of a MeanFlow policy: generate a chunk,
/// execute its `exec` slice one step at a time, then replan from the
/// updated observation window.
pub struct ChunkedQuoter {
    name: String,
    policy: Arc<MeanFlowPolicy>,
    noise: Box<dyn NoiseSource>,
    window: Option<ObservationWindow>,
    pending: VecDeque<QuoteAction>,
    scratch: Vec<f64>,
}

impl ChunkedQuoter {
    pub fn new(name: impl Into<String>, policy: Arc<MeanFlowPolicy>, noise: Box<dyn NoiseSource>) -> Self {
        let d = policy.horizons().chunk_len();
        Self { name: name.into(), policy, noise, window: None, pending: VecDeque::new(), scratch: vec![0.0; d] }
    }

    /// The pre-trained baseline: Gaussian noise through the frozen generator.
    pub fn pretrained(policy: Arc<MeanFlowPolicy>) -> Self {
        Self::new("Pretrained MeanFlow", policy, Box::new(GaussianNoise::default()))
    }

    pub fn policy(&self) -> &Arc<MeanFlowPolicy> {
        &self.policy
    }

    fn replan(&mut self) {
        let window = self.window.as_ref().expect("window initialised before replanning");
        let cond = self.policy.condition(&window.flat());
        self.noise.noise(&cond, &mut self.scratch);
        let mut chunk =
            self.policy.generate_normalized(&self.scratch, &cond).expect("policy dimensions validated at construction");
        self.policy.stats().unnormalize_actions_in_place(&mut chunk);
        self.pending.extend(self.policy.exec_actions(&chunk));
    }
}

impl QuotingStrategy for ChunkedQuoter {
    fn name(&self) -> &str {
        &self.name
    }

    fn begin_episode(&mut self, _config: &ScenarioConfig, seed: u64) -> Result<(), StrategyError> {
        self.window = None;
        self.pending.clear();
        self.noise.begin_episode(seed);
        Ok(())
    }

    fn quote(&mut self, state: &MarketState) -> QuoteAction {
        match &mut self.window {
            Some(w) => w.push(state),
            None => self.window = Some(ObservationWindow::new(self.policy.horizons().obs, state)),
        }
        if self.pending.is_empty() {
            self.replan();
        }
        self.pending.pop_front().expect("replan yields exec >= 1 actions")
    }

    fn fork(&self) -> Box<dyn QuotingStrategy> {
        Box::new(Self::new(self.name.clone(), Arc::clone(&self.policy), self.noise.fork()))
    }
}
