use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{gae, GaussianPolicy, NoiseRlError, ValueNet};
use crate::market::{MarketEnv, ObservationWindow, QuoteAction, ScenarioConfig, STATE_DIM};
use crate::meanflow::MeanFlowPolicy;
use crate::seed::{self, tag};

/// Turns a latent action into the quotes executed before the next decision.
pub trait ActionDecoder: Sync {
    /// Rows of market state in the observation window.
    fn obs_rows(&self) -> usize;

    /// Length of the latent action the policy emits.
    fn latent_dim(&self) -> usize;

    /// Policy input for a raw flattened window.
    fn condition(&self, raw_window: &[f64]) -> Vec<f64>;

    /// Appends the quotes to execute for latent action `w` to `out`.
    fn decode(&self, w: &[f64], cond: &[f64], out: &mut Vec<QuoteAction>) -> Result<(), NoiseRlError>;
}

/// The frozen generator: `w` is the noise fed to one-step generation and
/// the executed slice of the resulting chunk is returned.
impl ActionDecoder for MeanFlowPolicy {
    fn obs_rows(&self) -> usize {
        self.horizons().obs
    }

    fn latent_dim(&self) -> usize {
        self.horizons().chunk_len()
    }

    fn condition(&self, raw_window: &[f64]) -> Vec<f64> {
        MeanFlowPolicy::condition(self, raw_window)
    }

    fn decode(&self, w: &[f64], cond: &[f64], out: &mut Vec<QuoteAction>) -> Result<(), NoiseRlError> {
        let mut chunk = self.generate_normalized(w, cond)?;
        self.stats().unnormalize_actions_in_place(&mut chunk);
        out.extend(self.exec_actions(&chunk));
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RolloutConfig {
    pub envs: usize,
    /// Decisions collected per environment per update.
    pub chunks_per_env: usize,
    /// Discount rewards inside a chunk by `γ^k` (otherwise a plain sum).
    pub discount_within_chunk: bool,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        Self { envs: 16, chunks_per_env: 100, discount_within_chunk: false }
    }
}

/// One decision per entry, stored column-wise. Transitions are grouped in
/// contiguous per-environment segments; GAE never crosses a segment
/// boundary.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RolloutBuffer {
    pub obs_dim: usize,
    pub latent_dim: usize,
    pub obs: Vec<f64>,
    pub latents: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    /// `(end index, bootstrap value)` of each segment.
    segments: Vec<(usize, f64)>,
    /// Reward totals of episodes that finished inside the buffer.
    pub episode_rewards: Vec<f64>,
}

impl RolloutBuffer {
    pub fn new(obs_dim: usize, latent_dim: usize) -> Self {
        Self { obs_dim, latent_dim, ..Self::default() }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn obs(&self, i: usize) -> &[f64] {
        &self.obs[i * self.obs_dim..(i + 1) * self.obs_dim]
    }

    pub fn latent(&self, i: usize) -> &[f64] {
        &self.latents[i * self.latent_dim..(i + 1) * self.latent_dim]
    }

    pub fn push(&mut self, obs: &[f64], latent: &[f64], log_prob: f64, value: f64, reward: f64, done: bool) {
        debug_assert_eq!(obs.len(), self.obs_dim);
        debug_assert_eq!(latent.len(), self.latent_dim);
        self.obs.extend_from_slice(obs);
        self.latents.extend_from_slice(latent);
        self.log_probs.push(log_prob);
        self.values.push(value);
        self.rewards.push(reward);
        self.dones.push(done);
    }

    /// Closes the current segment; `bootstrap` is `V` of the state after its
    /// last transition (unused if that transition is terminal).
    pub fn end_segment(&mut self, bootstrap: f64) {
        let start = self.segments.last().map_or(0, |s| s.0);
        if self.len() > start {
            self.segments.push((self.len(), bootstrap));
        }
    }

    /// Appends another buffer's segments after this one's.
    pub fn append(&mut self, mut other: RolloutBuffer) {
        assert_eq!((self.obs_dim, self.latent_dim), (other.obs_dim, other.latent_dim));
        let offset = self.len();
        self.obs.append(&mut other.obs);
        self.latents.append(&mut other.latents);
        self.log_probs.append(&mut other.log_probs);
        self.values.append(&mut other.values);
        self.rewards.append(&mut other.rewards);
        self.dones.append(&mut other.dones);
        self.segments.extend(other.segments.iter().map(|(end, v)| (end + offset, *v)));
        self.episode_rewards.append(&mut other.episode_rewards);
        self.advantages.clear();
        self.returns.clear();
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    /// Fills `advantages` and `returns` segment by segment.
    pub fn compute_advantages(&mut self, gamma: f64, lambda: f64) {
        self.advantages.clear();
        self.returns.clear();
        let mut start = 0;
        for &(end, bootstrap) in &self.segments {
            let (a, r) = gae(
                &self.rewards[start..end],
                &self.values[start..end],
                &self.dones[start..end],
                bootstrap,
                gamma,
                lambda,
            );
            self.advantages.extend(a);
            self.returns.extend(r);
            start = end;
        }
        debug_assert_eq!(start, self.len(), "every transition belongs to a closed segment");
    }

    pub fn mean_reward(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            crate::evaluation::mean(&self.rewards)
        }
    }
}

fn check_shapes(policy: &GaussianPolicy, value: &ValueNet, decoder: &dyn ActionDecoder) -> Result<(), NoiseRlError> {
    let obs_dim = decoder.obs_rows() * STATE_DIM;
    if policy.obs_dim() != obs_dim || value.obs_dim() != obs_dim {
        return Err(NoiseRlError::Config("policy/value input width does not match the observation window"));
    }
    if policy.dim() != decoder.latent_dim() {
        return Err(NoiseRlError::Config("policy output width does not match the decoder's latent dimension"));
    }
    Ok(())
}

/// Seed of environment `index` within the collection seeded by `seed`.
pub fn env_seed(seed: u64, index: usize) -> u64 {
    seed::derive(seed, tag::ROLLOUT, index as u64)
}

/// Runs one environment for `chunks` decisions, resetting it with fresh
/// episode seeds whenever an episode ends, and returns a single-segment
/// buffer.
pub fn collect_segment(
    policy: &GaussianPolicy,
    value: &ValueNet,
    decoder: &dyn ActionDecoder,
    scenario: &ScenarioConfig,
    config: &RolloutConfig,
    gamma: f64,
    seed: u64,
) -> Result<RolloutBuffer, NoiseRlError> {
    check_shapes(policy, value, decoder)?;
    let obs_dim = policy.obs_dim();
    let mut buf = RolloutBuffer::new(obs_dim, policy.dim());
    let mut rng = seed::derived_rng(seed, tag::ROLLOUT, 0);
    let mut episode = 0u64;
    let mut env = MarketEnv::reset(scenario, seed::derive(seed, tag::EPISODE, episode))?;
    let mut window = ObservationWindow::new(decoder.obs_rows(), env.state());
    let mut raw = alloc::vec![0.0; obs_dim];
    let mut actions = Vec::new();
    let mut episode_reward = 0.0;
    let mut done = false;
    for _ in 0..config.chunks_per_env {
        window.write_flat(&mut raw);
        let cond = decoder.condition(&raw);
        let (w, log_prob) = policy.sample(&cond, &mut rng)?;
        let v = value.value(&cond)?;
        actions.clear();
        decoder.decode(&w, &cond, &mut actions)?;
        let mut r_total = 0.0;
        let mut weight = 1.0;
        for a in &actions {
            let out = env.step(*a)?;
            r_total += weight * out.reward;
            episode_reward += out.reward;
            if config.discount_within_chunk {
                weight *= gamma;
            }
            window.push(&out.next_state);
            if out.done {
                break;
            }
        }
        done = env.is_done();
        buf.push(&cond, &w, log_prob, v, r_total, done);
        if done {
            buf.episode_rewards.push(episode_reward);
            episode_reward = 0.0;
            episode += 1;
            env = MarketEnv::reset(scenario, seed::derive(seed, tag::EPISODE, episode))?;
            window = ObservationWindow::new(decoder.obs_rows(), env.state());
        }
    }
    let bootstrap = if done {
        0.0
    } else {
        window.write_flat(&mut raw);
        value.value(&decoder.condition(&raw))?
    };
    buf.end_segment(bootstrap);
    Ok(buf)
}

/// Sequential collection over `config.envs` environments, concatenated in
/// environment order.
pub fn collect_rollouts(
    policy: &GaussianPolicy,
    value: &ValueNet,
    decoder: &dyn ActionDecoder,
    scenario: &ScenarioConfig,
    config: &RolloutConfig,
    gamma: f64,
    seed: u64,
) -> Result<RolloutBuffer, NoiseRlError> {
    let mut buf = RolloutBuffer::new(policy.obs_dim(), policy.dim());
    for e in 0..config.envs {
        buf.append(collect_segment(policy, value, decoder, scenario, config, gamma, env_seed(seed, e))?);
    }
    Ok(buf)
}

/// Mean and population standard deviation normalization, in place.
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.is_empty() {
        return;
    }
    let m = crate::evaluation::mean(adv);
    let sq: Vec<f64> = adv.iter().map(|a| (a - m) * (a - m)).collect();
    let std = (crate::evaluation::pairwise_sum(&sq) / adv.len() as f64).sqrt().max(1e-8);
    for a in adv {
        *a = (*a - m) / std;
    }
}
