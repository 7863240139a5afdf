//! Scenario grid, expert tournament, demonstration collection and
//! normalization for imitation pre-training.

mod collect;
mod grid;
mod norm;
mod tournament;

pub use collect::{collect_demonstrations, collection_seed, Dataset, DemoRecord};
pub use grid::{build_scenario_grid, GridSpec};
pub use norm::NormStats;
pub use tournament::{
    candidate_scores, evaluate_candidates, score_entry, select_expert, tournament_seed, ScoreEntry, Scoreboard,
};

use crate::evaluation::EvalError;
use crate::market::MarketError;
use crate::meanflow::MeanFlowError;
use crate::strategy::StrategyError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DatasetError {
    #[error("candidate list is empty")]
    NoCandidates,
    #[error("at least one episode is required")]
    NoEpisodes,
    #[error("cannot compute statistics: no {0}")]
    Empty(&'static str),
    #[error("invalid normalization stats: {0}")]
    InvalidStats(&'static str),
    #[error("record {record} has the wrong shape or out-of-range actions")]
    Shape { record: usize },
    #[error("scenario id {0} does not fit in 16 bits")]
    ScenarioId(usize),
    #[error("expert produced a non-finite action")]
    NonFiniteAction,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Horizons(#[from] MeanFlowError),
}
