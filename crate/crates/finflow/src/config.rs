//! Run configuration: a TOML file whose absent keys take documented
//! defaults, plus command-line overrides.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use finflow_core::dataset::GridSpec;
use finflow_core::evaluation::MarketMode;
use finflow_core::market::ScenarioConfig;
use finflow_core::meanflow::{Horizons, TrainConfig, VelocityArch};
use finflow_core::noise_rl::{PpoHyper, RolloutConfig};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// File name of the resolved configuration echoed into output directories.
pub const RESOLVED_CONFIG: &str = "config.resolved.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub horizons: Horizons,
    pub data: DataConfig,
    pub train: TrainSection,
    pub finetune: FinetuneConfig,
    pub direct: DirectConfig,
    pub eval: EvalConfig,
    pub latency: LatencyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            horizons: Horizons::default(),
            data: DataConfig::default(),
            train: TrainSection::default(),
            finetune: FinetuneConfig::default(),
            direct: DirectConfig::default(),
            eval: EvalConfig::default(),
            latency: LatencyConfig::default(),
        }
    }
}

/// Which markets demonstrations are collected in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataSource {
    /// The full scenario grid.
    Grid,
    /// A single benchmark market, stored as scenario 0.
    Mode(MarketMode),
}

impl fmt::Display for DataSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Grid => f.write_str("grid"),
            Self::Mode(m) => write!(f, "{m}"),
        }
    }
}

impl FromStr for DataSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("grid") {
            return Ok(Self::Grid);
        }
        s.parse()
            .map(Self::Mode)
            .map_err(|_| Error::Config(format!("data source must be `grid` or a market mode, got `{s}`")))
    }
}

impl Serialize for DataSource {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DataSource {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: DataSource,
    /// Tournament episodes per candidate and scenario.
    pub tournament_episodes: usize,
    /// Demonstration episodes per scenario.
    pub episodes: usize,
    /// Train a direct PPO quoter per scenario and enter it in the tournament.
    pub ppo_candidate: bool,
    pub ppo_candidate_updates: usize,
    pub grid: GridSpec,
    /// Fields not varied by the grid.
    pub base: ScenarioConfig,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Grid,
            tournament_episodes: 20,
            episodes: 100,
            ppo_candidate: false,
            ppo_candidate_updates: 30,
            grid: GridSpec::default(),
            base: ScenarioConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub forward_mode: bool,
    pub cosine_decay: bool,
    pub hidden: usize,
    pub cond_hidden: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        let a = VelocityArch::desk_scale(0, 0);
        Self {
            steps: t.steps,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            forward_mode: t.forward_mode,
            cosine_decay: t.cosine_decay,
            hidden: a.hidden,
            cond_hidden: a.cond_hidden,
        }
    }
}

impl TrainSection {
    pub fn trainer(&self) -> TrainConfig {
        TrainConfig {
            steps: self.steps,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            forward_mode: self.forward_mode,
            cosine_decay: self.cosine_decay,
        }
    }

    pub fn arch(&self, horizons: &Horizons) -> VelocityArch {
        VelocityArch {
            noise_dim: horizons.chunk_len(),
            cond_dim: horizons.obs_len(),
            hidden: self.hidden,
            cond_hidden: self.cond_hidden,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FinetuneConfig {
    pub mode: MarketMode,
    pub updates: usize,
    pub rollout: RolloutConfig,
    pub ppo: PpoHyper,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        Self { mode: MarketMode::LL, updates: 200, rollout: RolloutConfig::default(), ppo: PpoHyper::default() }
    }
}

/// The per-step PPO baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DirectConfig {
    pub mode: MarketMode,
    pub updates: usize,
    pub rollout: RolloutConfig,
    pub ppo: PpoHyper,
}

impl Default for DirectConfig {
    fn default() -> Self {
        Self {
            mode: MarketMode::LL,
            updates: 200,
            rollout: RolloutConfig { envs: 16, chunks_per_env: 200, discount_within_chunk: false },
            ppo: PpoHyper { learning_rate: 3e-4, ..PpoHyper::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub episodes: usize,
    pub modes: Vec<MarketMode>,
    /// Upper end of the random quoter's uniform spread.
    pub random_range: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { episodes: 2000, modes: MarketMode::ALL.to_vec(), random_range: 20.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatencyConfig {
    /// Timed inference calls.
    pub calls: usize,
    pub warmup: usize,
    /// Distinct synthetic windows cycled through.
    pub windows: usize,
}

impl Default for LatencyConfig {
    fn default() -> Self {
        Self { calls: 1_000_000, warmup: 10_000, windows: 1024 }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_owned()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.to_string().trim_end())))
    }

    /// The defaults, or `path` when given.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("every field is representable in TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.horizons.validate()?;
        self.data.base.validate()?;
        self.finetune.ppo.validate()?;
        self.direct.ppo.validate()?;
        let positive = [
            ("data.tournament_episodes", self.data.tournament_episodes),
            ("data.episodes", self.data.episodes),
            ("train.steps", self.train.steps),
            ("train.batch_size", self.train.batch_size),
            ("train.hidden", self.train.hidden),
            ("train.cond_hidden", self.train.cond_hidden),
            ("finetune.rollout.envs", self.finetune.rollout.envs),
            ("finetune.rollout.chunks_per_env", self.finetune.rollout.chunks_per_env),
            ("direct.rollout.envs", self.direct.rollout.envs),
            ("direct.rollout.chunks_per_env", self.direct.rollout.chunks_per_env),
            ("eval.episodes", self.eval.episodes),
            ("latency.calls", self.latency.calls),
            ("latency.windows", self.latency.windows),
        ];
        if let Some((key, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{key} must be positive")));
        }
        if self.eval.modes.is_empty() {
            return Err(Error::Config("eval.modes must name at least one market".into()));
        }
        if !(self.eval.random_range > 0.0 && self.eval.random_range.is_finite()) {
            return Err(Error::Config("eval.random_range must be positive".into()));
        }
        if self.data.source == DataSource::Grid && self.data.grid.is_empty() {
            return Err(Error::Config("data.grid has an empty axis".into()));
        }
        Ok(())
    }

    /// Writes the resolved configuration into `dir`.
    pub fn echo_into(&self, dir: &Path) -> Result<()> {
        let path = dir.join(RESOLVED_CONFIG);
        std::fs::write(&path, self.to_toml()).map_err(|e| Error::io(path, e))
    }
}
