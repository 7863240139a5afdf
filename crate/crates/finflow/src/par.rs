//! Parallel runners. Every result is collected in index order, so outputs
//! do not depend on the number of worker threads.

use std::sync::Mutex;

use finflow_core::evaluation::{
    episode_seed, run_episode, BenchmarkReport, CellMetrics, EpisodeResult, MarketMode, ReportRow,
};
use finflow_core::market::ScenarioConfig;
use finflow_core::noise_rl::{collect_segment, env_seed, ActionDecoder, PpoAgent, RolloutBuffer, RolloutConfig};
use finflow_core::strategy::QuotingStrategy;
use rayon::prelude::*;

use crate::Result;

/// Environment variable capping the worker count.
pub const THREADS_VAR: &str = "FINFLOW_THREADS";

/// Sizes the global pool from `FINFLOW_THREADS` when set. Later calls, or
/// calls after the pool has started, are no-ops.
pub fn init_threads() -> crate::Result<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| crate::Error::Config(format!("{THREADS_VAR} must be a positive integer, got `{raw}`")))?;
    if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
        log::debug!("thread pool already initialised");
    }
    Ok(())
}

/// Runs `episodes` episodes of `strategy` on the shared seeds of `mode`.
pub fn run_cell(
    strategy: &dyn QuotingStrategy,
    mode: MarketMode,
    episodes: usize,
    seed: u64,
) -> Result<Vec<EpisodeResult>> {
    run_episodes(strategy, &mode.config(), episodes, |e| episode_seed(seed, mode, e))
}

/// Runs one episode per index with seed `seed_of(index)`, each on a fresh
/// fork of `strategy`.
pub fn run_episodes(
    strategy: &dyn QuotingStrategy,
    config: &ScenarioConfig,
    episodes: usize,
    seed_of: impl Fn(usize) -> u64 + Sync,
) -> Result<Vec<EpisodeResult>> {
    let proto = Mutex::new(strategy.fork());
    let fork = || proto.lock().expect("fork never panics").fork();
    (0..episodes)
        .into_par_iter()
        .map_init(fork, |agent, e| run_episode(agent.as_mut(), config, seed_of(e), None))
        .collect::<Result<Vec<_>, _>>()
        .map_err(Into::into)
}

/// One benchmark cell together with its per-episode results.
pub struct Cell {
    pub row: ReportRow,
    pub episodes: Vec<EpisodeResult>,
}

/// The mode-major benchmark grid. Strategies within a mode face identical
/// seeds.
pub fn run_benchmark(
    strategies: &[&dyn QuotingStrategy],
    modes: &[MarketMode],
    episodes: usize,
    seed: u64,
) -> Result<Vec<Cell>> {
    let mut cells = Vec::with_capacity(modes.len() * strategies.len());
    for &mode in modes {
        for &s in strategies {
            let results = run_cell(s, mode, episodes, seed)?;
            let row =
                ReportRow { mode, strategy: s.name().into(), seed, metrics: CellMetrics::from_episodes(&results)? };
            cells.push(Cell { row, episodes: results });
        }
    }
    Ok(cells)
}

pub fn report_of(cells: &[Cell]) -> BenchmarkReport {
    BenchmarkReport { rows: cells.iter().map(|c| c.row.clone()).collect() }
}

/// Collects `config.envs` segments in parallel and concatenates them in
/// environment order; equal to sequential collection.
pub fn collect_rollouts(
    agent: &PpoAgent,
    decoder: &dyn ActionDecoder,
    scenario: &ScenarioConfig,
    config: &RolloutConfig,
    seed: u64,
) -> Result<RolloutBuffer, finflow_core::noise_rl::NoiseRlError> {
    let segments = (0..config.envs)
        .into_par_iter()
        .map(|e| {
            collect_segment(
                &agent.policy,
                &agent.value,
                decoder,
                scenario,
                config,
                agent.hyper.gamma,
                env_seed(seed, e),
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut buf = RolloutBuffer::new(agent.policy.obs_dim(), agent.policy.dim());
    for s in segments {
        buf.append(s);
    }
    Ok(buf)
}
