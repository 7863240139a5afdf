use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{DatasetError, GridSpec, NormStats};
use crate::experts::ExpertKind;
use crate::market::{MarketEnv, ScenarioConfig, STATE_DIM};
use crate::meanflow::{Horizons, ACTION_DIM};
use crate::seed::{self, tag};
use crate::strategy::QuotingStrategy;

/// One imitation example.
///
/// `window` holds the raw last `obs` states, oldest first. `chunk` holds
/// `pred` action rows aligned so that row `obs − 1` is the action taken at
/// the window's last state; earlier rows are the preceding actions and later
/// rows the following ones, with repetition past either episode end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoRecord {
    pub window: Vec<f64>,
    pub chunk: Vec<f64>,
    pub scenario_id: u16,
    pub expert: ExpertKind,
}

/// A normalized imitation dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub horizons: Horizons,
    pub grid: Option<GridSpec>,
    pub stats: NormStats,
    pub records: Vec<DemoRecord>,
}

impl Dataset {
    /// Computes the normalization maps from raw records and normalizes
    /// every chunk into `[−1, 1]`. Windows stay raw.
    pub fn assemble(
        horizons: Horizons,
        grid: Option<GridSpec>,
        mut records: Vec<DemoRecord>,
    ) -> Result<Self, DatasetError> {
        let stats = stats_of(&horizons, &records)?;
        for r in &mut records {
            stats.normalize_actions_in_place(&mut r.chunk);
            for v in &mut r.chunk {
                // Guards against the last ulp of rounding at the range ends.
                *v = v.clamp(-1.0, 1.0);
            }
        }
        Ok(Self { horizons, grid, stats, records })
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        self.horizons.validate()?;
        self.stats.validate()?;
        for (i, r) in self.records.iter().enumerate() {
            if r.window.len() != self.horizons.obs_len() || r.chunk.len() != self.horizons.chunk_len() {
                return Err(DatasetError::Shape { record: i });
            }
            if r.chunk.iter().any(|v| !(-1.0..=1.0).contains(v)) {
                return Err(DatasetError::Shape { record: i });
            }
        }
        Ok(())
    }
}

/// Statistics over the decision-time state and action of every record
/// (the last window row and chunk row `obs − 1`), so padding does not
/// double count.
fn stats_of(h: &Horizons, records: &[DemoRecord]) -> Result<NormStats, DatasetError> {
    let last_row = (h.obs - 1) * STATE_DIM;
    let act_row = (h.obs - 1) * ACTION_DIM;
    let states = records
        .iter()
        .map(|r| <&[f64; STATE_DIM]>::try_from(&r.window[last_row..last_row + STATE_DIM]).expect("window row width"));
    let actions = records
        .iter()
        .map(|r| <&[f64; ACTION_DIM]>::try_from(&r.chunk[act_row..act_row + ACTION_DIM]).expect("chunk row width"));
    NormStats::from_data(states, actions)
}

/// Seed of demonstration episode `episode` in scenario `scenario_id`.
pub fn collection_seed(seed: u64, scenario_id: usize, episode: usize) -> u64 {
    seed::derive(seed, tag::COLLECT, ((scenario_id as u64) << 32) | episode as u64)
}

/// Rolls `expert` through `episodes` episodes of `scenario` and emits one
/// record per step, with raw (unnormalized) chunks.
pub fn collect_demonstrations(
    scenario: &ScenarioConfig,
    scenario_id: usize,
    expert: &dyn QuotingStrategy,
    kind: ExpertKind,
    horizons: &Horizons,
    episodes: usize,
    seed: u64,
) -> Result<Vec<DemoRecord>, DatasetError> {
    horizons.validate()?;
    let id = u16::try_from(scenario_id).map_err(|_| DatasetError::ScenarioId(scenario_id))?;
    let mut agent = expert.fork();
    let mut records = Vec::with_capacity(episodes * scenario.steps());
    for e in 0..episodes {
        let ep_seed = collection_seed(seed, scenario_id, e);
        let (states, actions) = expert_episode(agent.as_mut(), scenario, ep_seed)?;
        emit_records(&states, &actions, horizons, id, kind, &mut records);
    }
    Ok(records)
}

type Trajectory = (Vec<[f64; STATE_DIM]>, Vec<[f64; ACTION_DIM]>);

/// Decision-time states and actions of one expert episode.
fn expert_episode(
    agent: &mut dyn QuotingStrategy,
    scenario: &ScenarioConfig,
    seed: u64,
) -> Result<Trajectory, DatasetError> {
    let mut env = MarketEnv::reset(scenario, seed)?;
    agent.begin_episode(scenario, seed)?;
    let n = env.steps();
    let mut states = Vec::with_capacity(n);
    let mut actions = Vec::with_capacity(n);
    while !env.is_done() {
        let s = *env.state();
        let a = agent.quote(&s);
        if !(a.delta_bid.is_finite() && a.delta_ask.is_finite()) {
            return Err(DatasetError::NonFiniteAction);
        }
        states.push(s.features());
        actions.push([a.delta_bid, a.delta_ask]);
        env.step(a)?;
    }
    Ok((states, actions))
}

fn emit_records(
    states: &[[f64; STATE_DIM]],
    actions: &[[f64; ACTION_DIM]],
    h: &Horizons,
    scenario_id: u16,
    expert: ExpertKind,
    out: &mut Vec<DemoRecord>,
) {
    let n = states.len() as isize;
    let clamp = |i: isize| i.clamp(0, n - 1) as usize;
    for i in 0..n {
        let mut window = Vec::with_capacity(h.obs_len());
        for j in 0..h.obs as isize {
            window.extend_from_slice(&states[clamp(i - (h.obs as isize - 1) + j)]);
        }
        let mut chunk = Vec::with_capacity(h.chunk_len());
        for j in 0..h.pred as isize {
            chunk.extend_from_slice(&actions[clamp(i - (h.obs as isize - 1) + j)]);
        }
        out.push(DemoRecord { window, chunk, scenario_id, expert });
    }
}
