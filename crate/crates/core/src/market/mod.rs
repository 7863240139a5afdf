//! The market-making MDP: jump-diffusion mid-price, mutually exciting order
//! flow damped by the quoted spreads, Bernoulli fills and wealth accounting.

mod config;
mod env;
mod hawkes;
mod price;
mod window;

pub use config::ScenarioConfig;
pub use env::{fill_probability, MarketEnv, MarketState, QuoteAction, StepOutcome, TraceRow, STATE_DIM};
pub use hawkes::{HawkesState, Side};
pub use price::{simulate_price_path, PricePath};
pub use window::ObservationWindow;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MarketError {
    #[error("invalid scenario field `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: &'static str },
    #[error("invalid quote: {0}")]
    InvalidAction(&'static str),
    #[error("step called on a finished episode")]
    EpisodeDone,
}
