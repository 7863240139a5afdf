//! Trained policies packaged as quoting strategies, and their initial
//! configurations.

use alloc::boxed::Box;
use alloc::sync::Arc;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::{ActionDecoder, GaussianPolicy, NoiseRlError, PpoAgent, PpoHyper, ValueNet};
use crate::dataset::NormStats;
use crate::market::{MarketState, QuoteAction, ScenarioConfig, STATE_DIM};
use crate::meanflow::{ChunkedQuoter, MeanFlowPolicy, NoiseSource};
use crate::seed::{self, tag};
use crate::strategy::{QuotingStrategy, StrategyError};

/// Hidden widths of the policy and critic MLPs.
pub const HIDDEN: [usize; 2] = [64, 64];

/// Noise policy and critic over the expert's observation window. The mean
/// starts near zero and the spread at one, matching the generator's
/// training noise.
pub fn init_noise_agent(expert: &MeanFlowPolicy, hyper: PpoHyper, seed: u64) -> Result<PpoAgent, NoiseRlError> {
    let obs = expert.obs_rows() * STATE_DIM;
    let mut rng = seed::derived_rng(seed, tag::INIT, 1);
    let policy = GaussianPolicy::init(obs, &HIDDEN, expert.latent_dim(), 0.01, 0.0, &mut rng)?;
    let value = ValueNet::init(obs, &HIDDEN, &mut rng)?;
    PpoAgent::new(policy, value, hyper)
}

/// Deterministic noise `w = μ_φ(s)`.
#[derive(Debug, Clone)]
pub struct MeanNoise {
    policy: Arc<GaussianPolicy>,
}

impl MeanNoise {
    pub fn new(policy: Arc<GaussianPolicy>) -> Self {
        Self { policy }
    }
}

impl NoiseSource for MeanNoise {
    fn begin_episode(&mut self, _seed: u64) {}

    fn noise(&mut self, cond: &[f64], out: &mut [f64]) {
        let mean = self.policy.mean(cond).expect("noise policy matches the expert's condition width");
        out.copy_from_slice(&mean);
    }

    fn fork(&self) -> Box<dyn NoiseSource> {
        Box::new(self.clone())
    }
}

/// The fine-tuned agent: the frozen generator driven by the noise policy's mean.
pub fn finflow_quoter(
    expert: Arc<MeanFlowPolicy>,
    noise_policy: Arc<GaussianPolicy>,
) -> Result<ChunkedQuoter, NoiseRlError> {
    if noise_policy.dim() != expert.latent_dim() || noise_policy.obs_dim() != expert.obs_rows() * STATE_DIM {
        return Err(NoiseRlError::Config("noise policy does not match the expert's horizons"));
    }
    Ok(ChunkedQuoter::new("FinFlowRL", expert, Box::new(MeanNoise::new(noise_policy))))
}

/// Standardization of single market states for the direct policy, from
/// the scenario's scales rather than data.
pub fn direct_obs_stats(config: &ScenarioConfig) -> NormStats {
    let t = config.horizon;
    let price_scale = (config.initial_price * config.volatility * t.sqrt()).max(1e-3 * config.initial_price);
    let cap = f64::from(config.inventory_cap.max(1));
    let mean = [0.5 * t, config.initial_cash, 0.0, config.initial_price, 0.0];
    let std = [t / 12f64.sqrt(), config.initial_price * cap * 0.5, cap * 0.5, price_scale, 1.0];
    NormStats { obs_min: mean, obs_max: mean, obs_mean: mean, obs_std: std, act_min: [0.0; 2], act_max: [1.0; 2] }
}

/// Per-step decoder of the direct baseline: the latent action is the
/// spread pair itself, floored at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectDecoder {
    pub stats: NormStats,
}

impl ActionDecoder for DirectDecoder {
    fn obs_rows(&self) -> usize {
        1
    }

    fn latent_dim(&self) -> usize {
        2
    }

    fn condition(&self, raw_window: &[f64]) -> Vec<f64> {
        self.stats.normalize_obs(raw_window)
    }

    fn decode(&self, w: &[f64], _cond: &[f64], out: &mut Vec<QuoteAction>) -> Result<(), NoiseRlError> {
        out.push(QuoteAction::new(w[0].max(0.0), w[1].max(0.0)));
        Ok(())
    }
}

/// Initial spread and exploration scale of the direct baseline.
pub const DIRECT_INITIAL_SPREAD: f64 = 1.5;
pub const DIRECT_INITIAL_LOG_STD: f64 = -1.2;

pub fn init_direct_agent(hyper: PpoHyper, seed: u64) -> Result<PpoAgent, NoiseRlError> {
    let mut rng = seed::derived_rng(seed, tag::INIT, 2);
    let mut policy = GaussianPolicy::init(STATE_DIM, &HIDDEN, 2, 0.01, DIRECT_INITIAL_LOG_STD, &mut rng)?;
    let last = policy.mean_net.layer_count() - 1;
    policy.mean_net.bias_mut(last).fill(DIRECT_INITIAL_SPREAD);
    let value = ValueNet::init(STATE_DIM, &HIDDEN, &mut rng)?;
    PpoAgent::new(policy, value, hyper)
}

/// The direct baseline quoting its mean action each step.
#[derive(Debug, Clone)]
pub struct DirectQuoter {
    policy: Arc<GaussianPolicy>,
    decoder: DirectDecoder,
}

impl DirectQuoter {
    pub fn new(policy: Arc<GaussianPolicy>, stats: NormStats) -> Result<Self, NoiseRlError> {
        if policy.obs_dim() != STATE_DIM || policy.dim() != 2 {
            return Err(NoiseRlError::Config("direct policy must map one state to a spread pair"));
        }
        Ok(Self { policy, decoder: DirectDecoder { stats } })
    }
}

impl QuotingStrategy for DirectQuoter {
    fn name(&self) -> &str {
        "PPO"
    }

    fn begin_episode(&mut self, _config: &ScenarioConfig, _seed: u64) -> Result<(), StrategyError> {
        Ok(())
    }

    fn quote(&mut self, state: &MarketState) -> QuoteAction {
        let cond = self.decoder.condition(&state.features());
        let mean = self.policy.mean(&cond).expect("shape checked at construction");
        QuoteAction::new(mean[0].max(0.0), mean[1].max(0.0))
    }

    fn fork(&self) -> Box<dyn QuotingStrategy> {
        Box::new(self.clone())
    }
}
