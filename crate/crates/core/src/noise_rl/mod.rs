//! Reinforcement learning in the generator's noise space: a Gaussian noise
//! policy and critic trained with PPO/GAE while the MeanFlow generator stays
//! frozen, plus the same machinery acting on spreads directly.

mod agents;
mod gae;
mod gaussian;
mod ppo;
mod rollout;

pub use agents::{
    direct_obs_stats, finflow_quoter, init_direct_agent, init_noise_agent, DirectDecoder, DirectQuoter, MeanNoise,
    DIRECT_INITIAL_LOG_STD, DIRECT_INITIAL_SPREAD, HIDDEN,
};
pub use gae::gae;
pub use gaussian::{GaussianPolicy, ValueNet, LOG_STD_MAX, LOG_STD_MIN};
pub use ppo::{accumulate_surrogate, PpoAgent, PpoHyper, SurrogateSample, UpdateStats};
pub use rollout::{
    collect_rollouts, collect_segment, env_seed, normalize_advantages, ActionDecoder, RolloutBuffer, RolloutConfig,
};

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::market::MarketError;
use crate::meanflow::MeanFlowError;
use crate::numerics::NumericsError;
use crate::seed::{self, tag};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NoiseRlError {
    #[error("configuration error: {0}")]
    Config(&'static str),
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("rollout buffer is empty")]
    EmptyRollout,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    MeanFlow(#[from] MeanFlowError),
}

/// One line of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateLog {
    pub update: usize,
    /// Mean chunk reward `r_total` of the rollouts the update trained on.
    pub mean_reward: f64,
    #[serde(flatten)]
    pub stats: UpdateStats,
}

/// Seed of the rollouts collected for update `update`.
pub fn rollout_seed(seed: u64, update: usize) -> u64 {
    seed::derive(seed, tag::ROLLOUT, u64::MAX - update as u64)
}

/// Alternates collection and PPO updates `updates` times. `collect` receives
/// the current agent and the update's rollout seed, which lets callers
/// parallelize collection without changing results.
pub fn fine_tune<C>(
    agent: &mut PpoAgent,
    updates: usize,
    seed: u64,
    mut collect: C,
    mut on_update: impl FnMut(&UpdateLog),
) -> Result<Vec<UpdateLog>, NoiseRlError>
where
    C: FnMut(&PpoAgent, u64) -> Result<RolloutBuffer, NoiseRlError>,
{
    let mut logs = Vec::with_capacity(updates);
    for u in 0..updates {
        let mut buf = collect(agent, rollout_seed(seed, u))?;
        let mean_reward = buf.mean_reward();
        let stats = agent.update(&mut buf, seed, u as u64)?;
        let log = UpdateLog { update: u, mean_reward, stats };
        on_update(&log);
        logs.push(log);
    }
    Ok(logs)
}
