//! Performance metrics and the four-mode benchmark.

mod benchmark;
mod episode;
mod metrics;

pub use benchmark::{
    episode_drawdown, episode_seed, run_benchmark, run_cell, BenchmarkReport, CellMetrics, MarketMode, ReportRow,
};
pub use episode::{run_episode, EpisodeResult};
pub use metrics::{
    cumulative_return, max_drawdown, mean, mean_and_variance, paired_t_statistic, pairwise_sum, sharpe,
    welch_t_statistic, MetricError,
};

use alloc::string::String;

use crate::market::MarketError;
use crate::strategy::StrategyError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("a benchmark cell needs at least one episode")]
    NoEpisodes,
    #[error("unknown market mode `{0}` (expected HH, HL, LH or LL)")]
    UnknownMode(String),
}
