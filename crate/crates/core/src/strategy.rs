//! The common interface every quoting agent implements, plus the simple
//! non-learned quoters.

use alloc::boxed::Box;
use alloc::string::String;

use crate::experts::{self, AsParams, ExpertError, ExpertKind, GlftParams};
use crate::market::{MarketState, QuoteAction, ScenarioConfig};
use crate::seed::{self, tag, Rng};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StrategyError {
    #[error(transparent)]
    Expert(#[from] ExpertError),
    #[error("{0}")]
    Unsupported(String),
}

/// A quoting agent driven one environment step at a time.
///
/// `begin_episode` is called before the first `quote` of every episode with
/// the episode's seed, so stochastic strategies are reproducible and
/// chunked policies can reset their buffers.
pub trait QuotingStrategy: Send {
    fn name(&self) -> &str;

    fn begin_episode(&mut self, config: &ScenarioConfig, seed: u64) -> Result<(), StrategyError>;

    fn quote(&mut self, state: &MarketState) -> QuoteAction;

    /// An independent copy in its initial condition, for parallel episodes.
    fn fork(&self) -> Box<dyn QuotingStrategy>;
}

/// One of the closed-form experts, calibrated to each episode's scenario.
#[derive(Debug, Clone)]
pub struct ExpertStrategy {
    kind: ExpertKind,
    as_params: Option<AsParams>,
    glft_params: Option<GlftParams>,
}

impl ExpertStrategy {
    pub fn new(kind: ExpertKind) -> Result<Self, StrategyError> {
        if kind == ExpertKind::DirectPpo {
            return Err(StrategyError::Unsupported("the PPO teacher is a trained policy, not a closed form".into()));
        }
        Ok(Self { kind, as_params: None, glft_params: None })
    }

    pub fn kind(&self) -> ExpertKind {
        self.kind
    }
}

impl QuotingStrategy for ExpertStrategy {
    fn name(&self) -> &str {
        self.kind.name()
    }

    fn begin_episode(&mut self, config: &ScenarioConfig, _seed: u64) -> Result<(), StrategyError> {
        match self.kind {
            ExpertKind::AvellanedaStoikov => {
                let p = AsParams::calibrated(config);
                p.validate()?;
                self.as_params = Some(p);
            }
            _ => {
                let p = GlftParams::calibrated(config);
                p.validate()?;
                if self.kind == ExpertKind::GlftDrift {
                    experts::glft_drift_quotes(0, &p)?;
                }
                self.glft_params = Some(p);
            }
        }
        Ok(())
    }

    fn quote(&mut self, state: &MarketState) -> QuoteAction {
        let q = state.inventory;
        match self.kind {
            ExpertKind::AvellanedaStoikov => {
                experts::as_quotes(q, state.time, self.as_params.as_ref().expect("begin_episode not called"))
            }
            ExpertKind::Glft => experts::glft_quotes(q, self.glft_params.as_ref().expect("begin_episode not called")),
            ExpertKind::GlftDrift => {
                let p = self.glft_params.as_ref().expect("begin_episode not called");
                // Validated in begin_episode.
                experts::glft_drift_quotes(q, p).unwrap_or(QuoteAction::WITHDRAWN)
            }
            ExpertKind::DirectPpo => unreachable!("rejected in ExpertStrategy::new"),
        }
    }

    fn fork(&self) -> Box<dyn QuotingStrategy> {
        Box::new(Self::new(self.kind).expect("kind validated at construction"))
    }
}

/// Quotes the same symmetric spread at every step.
#[derive(Debug, Clone, Copy)]
pub struct FixedQuoter {
    pub delta: f64,
}

impl QuotingStrategy for FixedQuoter {
    fn name(&self) -> &str {
        "Fixed"
    }

    fn begin_episode(&mut self, _config: &ScenarioConfig, _seed: u64) -> Result<(), StrategyError> {
        Ok(())
    }

    fn quote(&mut self, _state: &MarketState) -> QuoteAction {
        QuoteAction::new(self.delta, self.delta)
    }

    fn fork(&self) -> Box<dyn QuotingStrategy> {
        Box::new(*self)
    }
}

/// Both spreads uniform on `[0, range]`, reseeded per episode.
#[derive(Debug, Clone)]
pub struct RandomQuoter {
    range: f64,
    rng: Rng,
}

impl RandomQuoter {
    pub fn new(range: f64) -> Self {
        assert!(range > 0.0 && range.is_finite(), "random quote range must be positive");
        Self { range, rng: seed::rng(0) }
    }

    pub fn range(&self) -> f64 {
        self.range
    }
}

impl QuotingStrategy for RandomQuoter {
    fn name(&self) -> &str {
        "Random"
    }

    fn begin_episode(&mut self, _config: &ScenarioConfig, seed: u64) -> Result<(), StrategyError> {
        self.rng = seed::derived_rng(seed, tag::STRATEGY, 0);
        Ok(())
    }

    fn quote(&mut self, _state: &MarketState) -> QuoteAction {
        experts::random_quotes(&mut self.rng, self.range)
    }

    fn fork(&self) -> Box<dyn QuotingStrategy> {
        Box::new(Self::new(self.range))
    }
}
