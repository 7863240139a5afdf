use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{max_drawdown, mean, run_episode, sharpe, EpisodeResult, EvalError, MetricError};
use crate::market::ScenarioConfig;
use crate::seed::{self, tag};
use crate::strategy::QuotingStrategy;

/// The four evaluation markets: volatility level then demand level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MarketMode {
    HH,
    HL,
    LH,
    LL,
}

impl MarketMode {
    pub const ALL: [MarketMode; 4] = [Self::HH, Self::HL, Self::LH, Self::LL];

    pub fn volatility(self) -> f64 {
        match self {
            Self::HH | Self::HL => 0.25,
            Self::LH | Self::LL => 0.02,
        }
    }

    pub fn arrival_intensity(self) -> f64 {
        match self {
            Self::HH | Self::LH => 50.0,
            Self::HL | Self::LL => 25.0,
        }
    }

    /// No drift, no jumps, `H = 0.5`, 100 steps, `q_max = 10`, `γ_pen = 0.1`.
    pub fn config(self) -> ScenarioConfig {
        let lambda = self.arrival_intensity();
        ScenarioConfig {
            drift: 0.0,
            volatility: self.volatility(),
            jump_intensity: 0.0,
            base_intensity_buy: lambda,
            base_intensity_sell: lambda,
            ..ScenarioConfig::default()
        }
    }

    pub fn index(self) -> u64 {
        self as u64
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::HH => "HH",
            Self::HL => "HL",
            Self::LH => "LH",
            Self::LL => "LL",
        }
    }
}

impl fmt::Display for MarketMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MarketMode {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| EvalError::UnknownMode(s.into()))
    }
}

/// Seed of episode `episode` in `mode`; shared by every strategy.
pub fn episode_seed(seed: u64, mode: MarketMode, episode: usize) -> u64 {
    seed::derive(seed, tag::BENCHMARK, (mode.index() << 32) | episode as u64)
}

/// Maximum drawdown of one episode's wealth path. A path that reaches zero
/// or below is ruined and scores a total drawdown of 1.
pub fn episode_drawdown(wealth: &[f64]) -> Result<f64, MetricError> {
    match max_drawdown(wealth) {
        Err(MetricError::NonPositive { .. }) => Ok(1.0),
        other => other,
    }
}

/// Aggregate metrics of one (mode, strategy) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellMetrics {
    pub mean_pnl: f64,
    /// Sharpe ratio of the per-episode PnL values; `None` when undefined.
    pub sharpe: Option<f64>,
    /// Mean per-episode maximum drawdown of the wealth path, in percent.
    pub mdd_percent: f64,
    pub mean_reward: f64,
    pub episodes: usize,
}

impl CellMetrics {
    pub fn from_episodes(results: &[EpisodeResult]) -> Result<Self, EvalError> {
        if results.is_empty() {
            return Err(EvalError::NoEpisodes);
        }
        let pnls: Vec<f64> = results.iter().map(|r| r.pnl).collect();
        let rewards: Vec<f64> = results.iter().map(|r| r.total_reward).collect();
        let mdds =
            results.iter().map(|r| episode_drawdown(&r.wealth).map(|d| d * 100.0)).collect::<Result<Vec<f64>, _>>()?;
        Ok(Self {
            mean_pnl: mean(&pnls),
            sharpe: sharpe(&pnls).ok(),
            mdd_percent: mean(&mdds),
            mean_reward: mean(&rewards),
            episodes: results.len(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub mode: MarketMode,
    pub strategy: String,
    pub seed: u64,
    #[serde(flatten)]
    pub metrics: CellMetrics,
}

/// Mode-major table of cells.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<ReportRow>,
}

impl BenchmarkReport {
    pub fn cell(&self, mode: MarketMode, strategy: &str) -> Option<&CellMetrics> {
        self.rows.iter().find(|r| r.mode == mode && r.strategy == strategy).map(|r| &r.metrics)
    }
}

/// Runs `episodes` episodes of every strategy in every mode, in order, and
/// returns the per-episode results of one cell.
pub fn run_cell(
    strategy: &dyn QuotingStrategy,
    mode: MarketMode,
    episodes: usize,
    seed: u64,
) -> Result<Vec<EpisodeResult>, EvalError> {
    let config = mode.config();
    let mut agent: Box<dyn QuotingStrategy> = strategy.fork();
    (0..episodes).map(|e| run_episode(agent.as_mut(), &config, episode_seed(seed, mode, e), None)).collect()
}

/// Sequential benchmark. Strategies within a mode face identical seeds.
pub fn run_benchmark(
    strategies: &[&dyn QuotingStrategy],
    modes: &[MarketMode],
    episodes: usize,
    seed: u64,
) -> Result<BenchmarkReport, EvalError> {
    let mut rows = Vec::with_capacity(modes.len() * strategies.len());
    for &mode in modes {
        for strategy in strategies {
            let results = run_cell(*strategy, mode, episodes, seed)?;
            rows.push(ReportRow {
                mode,
                strategy: strategy.name().into(),
                seed,
                metrics: CellMetrics::from_episodes(&results)?,
            });
        }
    }
    Ok(BenchmarkReport { rows })
}
