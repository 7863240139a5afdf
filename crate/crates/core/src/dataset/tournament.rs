use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::evaluation::{mean, run_episode, sharpe};
use crate::market::ScenarioConfig;
use crate::seed::{self, tag};
use crate::strategy::QuotingStrategy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub name: String,
    /// Mean total episode reward.
    pub mean_score: f64,
    /// Sharpe ratio of the per-episode totals; `None` when undefined.
    pub sharpe: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scoreboard {
    pub entries: Vec<ScoreEntry>,
}

/// Seed of tournament episode `episode` in scenario `scenario_id`.
pub fn tournament_seed(seed: u64, scenario_id: usize, episode: usize) -> u64 {
    seed::derive(seed, tag::TOURNAMENT, ((scenario_id as u64) << 32) | episode as u64)
}

/// Per-episode total rewards of one candidate on the tournament seeds.
pub fn candidate_scores(
    candidate: &dyn QuotingStrategy,
    scenario: &ScenarioConfig,
    scenario_id: usize,
    episodes: usize,
    seed: u64,
) -> Result<Vec<f64>, DatasetError> {
    let mut agent: Box<dyn QuotingStrategy> = candidate.fork();
    (0..episodes)
        .map(|e| {
            run_episode(agent.as_mut(), scenario, tournament_seed(seed, scenario_id, e), None)
                .map(|r| r.total_reward)
                .map_err(DatasetError::from)
        })
        .collect()
}

pub fn score_entry(name: &str, totals: &[f64]) -> ScoreEntry {
    ScoreEntry { name: name.into(), mean_score: mean(totals), sharpe: sharpe(totals).ok() }
}

/// Runs every candidate on the same seed sequence.
pub fn evaluate_candidates(
    scenario: &ScenarioConfig,
    scenario_id: usize,
    candidates: &[&dyn QuotingStrategy],
    episodes: usize,
    seed: u64,
) -> Result<Scoreboard, DatasetError> {
    if candidates.is_empty() {
        return Err(DatasetError::NoCandidates);
    }
    if episodes == 0 {
        return Err(DatasetError::NoEpisodes);
    }
    let entries = candidates
        .iter()
        .map(|c| Ok(score_entry(c.name(), &candidate_scores(*c, scenario, scenario_id, episodes, seed)?)))
        .collect::<Result<_, DatasetError>>()?;
    Ok(Scoreboard { entries })
}

/// Index of the winner: highest mean score, then highest Sharpe (undefined
/// ranks lowest), then earliest position.
pub fn select_expert(board: &Scoreboard) -> Result<usize, DatasetError> {
    let key = |e: &ScoreEntry| (e.mean_score, e.sharpe.unwrap_or(f64::NEG_INFINITY));
    let mut best = 0;
    for (i, e) in board.entries.iter().enumerate().skip(1) {
        let (s, r) = key(e);
        let (bs, br) = key(&board.entries[best]);
        let better = match s.partial_cmp(&bs) {
            Some(Ordering::Greater) => true,
            Some(Ordering::Equal) => r > br,
            _ => bs.is_nan() && !s.is_nan(),
        };
        if better {
            best = i;
        }
    }
    if board.entries.is_empty() {
        return Err(DatasetError::NoCandidates);
    }
    Ok(best)
}
