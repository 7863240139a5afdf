use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::market::{MarketEnv, ScenarioConfig, TraceRow};
use crate::strategy::QuotingStrategy;

/// Everything the metrics need from one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    /// Mark-to-market wealth `W_0..W_N`.
    pub wealth: Vec<f64>,
    /// Period returns `W_i/W_{i−1} − 1`, length `N`.
    pub returns: Vec<f64>,
    /// `W_N − W_0`.
    pub pnl: f64,
    /// Sum of environment rewards (PnL net of the inventory penalty).
    pub total_reward: f64,
}

/// Plays one full episode of `strategy` in a market seeded by `seed`.
///
/// The strategy is told the same seed, so two runs with equal arguments are
/// identical, and different strategies face the same price path and order
/// flow.
pub fn run_episode(
    strategy: &mut dyn QuotingStrategy,
    config: &ScenarioConfig,
    seed: u64,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<EpisodeResult, EvalError> {
    let mut env = MarketEnv::reset(config, seed)?;
    strategy.begin_episode(config, seed)?;
    let n = env.steps();
    let mut wealth = Vec::with_capacity(n + 1);
    let mut returns = Vec::with_capacity(n);
    wealth.push(env.state().wealth());
    let mut total_reward = 0.0;
    while !env.is_done() {
        let action = strategy.quote(env.state());
        let out = env.step(action)?;
        if let Some(rows) = trace.as_deref_mut() {
            rows.push(TraceRow::new(env.step_index(), &action, &out));
        }
        let w = out.next_state.wealth();
        let prev = *wealth.last().expect("wealth starts non-empty");
        returns.push(w / prev - 1.0);
        wealth.push(w);
        total_reward += out.reward;
    }
    let pnl = wealth[n] - wealth[0];
    Ok(EpisodeResult { wealth, returns, pnl, total_reward })
}
