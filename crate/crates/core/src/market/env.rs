#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{simulate_price_path, HawkesState, MarketError, PricePath, ScenarioConfig, Side};
use crate::seed::{self, tag, Rng};

/// Length of the feature vector of one [`MarketState`].
pub const STATE_DIM: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketState {
    pub time: f64,
    pub cash: f64,
    pub inventory: i32,
    pub mid_price: f64,
    /// Quoted ask minus quoted bid on the previous step, 0 at reset.
    pub prev_spread: f64,
}

impl MarketState {
    /// `(t, X, q, S, spread)` as reals.
    pub fn features(&self) -> [f64; STATE_DIM] {
        [self.time, self.cash, f64::from(self.inventory), self.mid_price, self.prev_spread]
    }

    pub fn wealth(&self) -> f64 {
        self.cash + f64::from(self.inventory) * self.mid_price
    }
}

/// Quote distances from the mid-price. `f64::INFINITY` withdraws a side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuoteAction {
    pub delta_bid: f64,
    pub delta_ask: f64,
}

impl QuoteAction {
    pub const fn new(delta_bid: f64, delta_ask: f64) -> Self {
        Self { delta_bid, delta_ask }
    }

    pub const WITHDRAWN: Self = Self::new(f64::INFINITY, f64::INFINITY);

    fn validate(&self) -> Result<(), MarketError> {
        for d in [self.delta_bid, self.delta_ask] {
            if d.is_nan() {
                return Err(MarketError::InvalidAction("spread is NaN"));
            }
            if d < 0.0 {
                return Err(MarketError::InvalidAction("negative spread"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next_state: MarketState,
    pub reward: f64,
    pub done: bool,
    pub bid_filled: bool,
    pub ask_filled: bool,
    /// Undamped `(λ_b, λ_a)` in force during the step.
    pub intensities: (f64, f64),
}

/// One line of an exported episode trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: usize,
    pub t: f64,
    #[serde(rename = "S")]
    pub mid_price: f64,
    pub q: i32,
    #[serde(rename = "X")]
    pub cash: f64,
    pub delta_bid: f64,
    pub delta_ask: f64,
    pub bid_fill: bool,
    pub ask_fill: bool,
    pub reward: f64,
}

impl TraceRow {
    pub fn new(step: usize, action: &QuoteAction, outcome: &StepOutcome) -> Self {
        let s = &outcome.next_state;
        Self {
            step,
            t: s.time,
            mid_price: s.mid_price,
            q: s.inventory,
            cash: s.cash,
            delta_bid: action.delta_bid,
            delta_ask: action.delta_ask,
            bid_fill: outcome.bid_filled,
            ask_fill: outcome.ask_filled,
            reward: outcome.reward,
        }
    }
}

/// `1 − exp(−λ·e^{−kδ}·dt)`; an infinite spread never fills, even at `k = 0`.
pub fn fill_probability(intensity: f64, sensitivity: f64, delta: f64, dt: f64) -> f64 {
    if delta.is_infinite() {
        return 0.0;
    }
    let damped = intensity * (-sensitivity * delta).exp();
    -(-damped * dt).exp_m1()
}

/// One episode of the market. Cloning forks the episode including its RNG
/// streams, so a clone replays exactly the same future for the same quotes.
#[derive(Debug, Clone)]
pub struct MarketEnv {
    config: ScenarioConfig,
    path: PricePath,
    fill_rng: Rng,
    hawkes: HawkesState,
    state: MarketState,
    step_index: usize,
    steps: usize,
}

impl MarketEnv {
    /// Validates `config`, pre-simulates the price path and returns the
    /// environment with its initial state `(0, X_0, 0, S_0, 0)`.
    pub fn reset(config: &ScenarioConfig, seed: u64) -> Result<Self, MarketError> {
        config.validate()?;
        let mut price_rng = seed::derived_rng(seed, tag::PRICE_PATH, 0);
        let path = simulate_price_path(config, &mut price_rng);
        let state = MarketState {
            time: 0.0,
            cash: config.initial_cash,
            inventory: 0,
            mid_price: config.initial_price,
            prev_spread: 0.0,
        };
        Ok(Self {
            config: config.clone(),
            path,
            fill_rng: seed::derived_rng(seed, tag::FILLS, 0),
            hawkes: HawkesState::default(),
            state,
            step_index: 0,
            steps: config.steps(),
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn state(&self) -> &MarketState {
        &self.state
    }

    pub fn hawkes(&self) -> &HawkesState {
        &self.hawkes
    }

    pub fn price_path(&self) -> &[f64] {
        &self.path.prices
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.step_index >= self.steps
    }

    pub fn step(&mut self, action: QuoteAction) -> Result<StepOutcome, MarketError> {
        if self.is_done() {
            return Err(MarketError::EpisodeDone);
        }
        action.validate()?;
        let cfg = &self.config;
        let lambda_b = self.hawkes.intensity(Side::Buy, cfg);
        let lambda_a = self.hawkes.intensity(Side::Sell, cfg);
        let p_bid = fill_probability(lambda_b, cfg.spread_sensitivity, action.delta_bid, cfg.dt);
        let p_ask = fill_probability(lambda_a, cfg.spread_sensitivity, action.delta_ask, cfg.dt);
        // Both uniforms are always drawn so that strategies sharing a seed
        // see the same order flow regardless of their quotes.
        let u_bid: f64 = self.fill_rng.random();
        let u_ask: f64 = self.fill_rng.random();

        let s = self.state.mid_price;
        let wealth_before = self.state.wealth();
        let mut q = self.state.inventory;
        let mut cash = self.state.cash;
        let bid_filled = u_bid < p_bid && q < cfg.inventory_cap;
        if bid_filled {
            q += 1;
            cash -= s - action.delta_bid;
        }
        let ask_filled = u_ask < p_ask && q > -cfg.inventory_cap;
        if ask_filled {
            q -= 1;
            cash += s + action.delta_ask;
        }
        self.hawkes.advance(cfg, cfg.dt, bid_filled, ask_filled);

        self.step_index += 1;
        let next = MarketState {
            time: self.step_index as f64 * cfg.dt,
            cash,
            inventory: q,
            mid_price: self.path.prices[self.step_index],
            prev_spread: action.delta_ask + action.delta_bid,
        };
        let qf = f64::from(q);
        let penalty = cfg.inventory_penalty * qf * qf * cfg.volatility * cfg.volatility * cfg.dt;
        let reward = next.wealth() - wealth_before - penalty;
        self.state = next;
        Ok(StepOutcome {
            next_state: next,
            reward,
            done: self.is_done(),
            bid_filled,
            ask_filled,
            intensities: (lambda_b, lambda_a),
        })
    }
}

#[cfg(test)]
mod tests {
    use alloc::vec::Vec;

    use proptest::prelude::*;

    use super::*;

    fn inventory_penalty_sum(cfg: &ScenarioConfig, qs: &[i32]) -> f64 {
        qs.iter().map(|&q| cfg.inventory_penalty * f64::from(q * q) * cfg.volatility * cfg.volatility * cfg.dt).sum()
    }

    #[test]
    fn reset_returns_initial_state() {
        let cfg = ScenarioConfig::default();
        let env = MarketEnv::reset(&cfg, 1).unwrap();
        assert_eq!(
            *env.state(),
            MarketState { time: 0.0, cash: 1000.0, inventory: 0, mid_price: cfg.initial_price, prev_spread: 0.0 }
        );
        assert!(!env.is_done());
        assert_eq!(env.price_path().len(), 101);
        let again = MarketEnv::reset(&cfg, 1).unwrap();
        assert_eq!(env.price_path(), again.price_path());
        assert_ne!(env.price_path(), MarketEnv::reset(&cfg, 2).unwrap().price_path());
    }

    #[test]
    fn rejects_invalid_config_and_quotes() {
        let cfg = ScenarioConfig { decay: -1.0, ..ScenarioConfig::default() };
        assert!(matches!(MarketEnv::reset(&cfg, 0), Err(MarketError::InvalidConfig { field: "decay", .. })));
        let mut env = MarketEnv::reset(&ScenarioConfig::default(), 0).unwrap();
        assert!(matches!(env.step(QuoteAction::new(-0.1, 0.1)), Err(MarketError::InvalidAction(_))));
        assert!(matches!(env.step(QuoteAction::new(0.1, f64::NAN)), Err(MarketError::InvalidAction(_))));
        assert_eq!(env.step_index(), 0);
    }

    #[test]
    fn step_after_done_is_an_error() {
        let mut env = MarketEnv::reset(&ScenarioConfig { dt: 0.02, ..ScenarioConfig::default() }, 3).unwrap();
        let mut last = None;
        while !env.is_done() {
            last = Some(env.step(QuoteAction::new(0.5, 0.5)).unwrap());
        }
        let last = last.unwrap();
        assert!(last.done);
        assert!((last.next_state.time - 1.0).abs() < 1e-12);
        assert_eq!(env.step(QuoteAction::new(0.5, 0.5)), Err(MarketError::EpisodeDone));
    }

    #[test]
    fn withdrawn_quotes_earn_exactly_zero() {
        for k in [0.0, 1.5] {
            let cfg = ScenarioConfig {
                volatility: 0.3,
                jump_intensity: 2.0,
                spread_sensitivity: k,
                ..ScenarioConfig::default()
            };
            let mut env = MarketEnv::reset(&cfg, 11).unwrap();
            let mut total = 0.0;
            while !env.is_done() {
                let out = env.step(QuoteAction::WITHDRAWN).unwrap();
                assert!(!out.bid_filled && !out.ask_filled);
                total += out.reward;
            }
            assert_eq!(total, 0.0);
        }
    }

    #[test]
    fn withdrawn_quotes_with_inventory_mark_to_market() {
        let cfg = ScenarioConfig { volatility: 0.3, ..ScenarioConfig::default() };
        let mut env = MarketEnv::reset(&cfg, 5).unwrap();
        // Build some inventory with aggressive bids only.
        while env.state().inventory < 3 {
            env.step(QuoteAction::new(0.0, f64::INFINITY)).unwrap();
        }
        let before = *env.state();
        let out = env.step(QuoteAction::WITHDRAWN).unwrap();
        let q = f64::from(before.inventory);
        let expect = q * (out.next_state.mid_price - before.mid_price)
            - cfg.inventory_penalty * q * q * cfg.volatility * cfg.volatility * cfg.dt;
        assert!((out.reward - expect).abs() < 1e-9);
    }

    #[test]
    fn fill_probability_limits() {
        assert_eq!(fill_probability(25.0, 1.5, f64::INFINITY, 0.01), 0.0);
        assert_eq!(fill_probability(25.0, 0.0, f64::INFINITY, 0.01), 0.0);
        // k = 0 removes the spread dependence.
        let p0 = fill_probability(25.0, 0.0, 0.0, 1e-4);
        assert_eq!(p0, fill_probability(25.0, 0.0, 7.0, 1e-4));
        assert!((p0 / (25.0 * 1e-4) - 1.0).abs() < 2e-3);
        assert!(fill_probability(25.0, 1.5, 40.0, 0.01) < 1e-12);
    }

    #[test]
    fn bid_fill_frequency_matches_bernoulli_oracle() {
        // Single steps from a fresh state, excitation off.
        let cfg = ScenarioConfig {
            self_excite_aa: 0.0,
            self_excite_bb: 0.0,
            cross_excite_ab: 0.0,
            cross_excite_ba: 0.0,
            ..ScenarioConfig::default()
        };
        let delta = 0.3;
        let p = -(-(cfg.base_intensity_buy * (-cfg.spread_sensitivity * delta).exp()) * cfg.dt).exp_m1();
        let n = 100_000;
        let mut hits = 0u32;
        for i in 0..n {
            let mut env = MarketEnv::reset(&cfg, 99 + i as u64).unwrap();
            if env.step(QuoteAction::new(delta, delta)).unwrap().bid_filled {
                hits += 1;
            }
        }
        let freq = f64::from(hits) / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() < 3.0 * se, "freq {freq} vs {p} (se {se})");
    }

    #[test]
    fn unexcited_fills_pass_chi_square() {
        // With α = 0 and k = 0 each side is an independent Bernoulli(1 − e^{−μ dt}).
        // Joint outcome counts over four cells against the product distribution.
        let cfg = ScenarioConfig {
            self_excite_aa: 0.0,
            self_excite_bb: 0.0,
            cross_excite_ab: 0.0,
            cross_excite_ba: 0.0,
            spread_sensitivity: 0.0,
            inventory_cap: i32::MAX - 1,
            horizon: 1000.0,
            ..ScenarioConfig::default()
        };
        let mut env = MarketEnv::reset(&cfg, 2024).unwrap();
        let p = -(-cfg.base_intensity_buy * cfg.dt).exp_m1();
        let mut cells = [0u32; 4];
        for _ in 0..100_000 {
            let out = env.step(QuoteAction::new(0.1, 0.1)).unwrap();
            cells[usize::from(out.bid_filled) * 2 + usize::from(out.ask_filled)] += 1;
        }
        let n = 100_000.0;
        let expected = [(1.0 - p) * (1.0 - p), (1.0 - p) * p, p * (1.0 - p), p * p];
        let chi2: f64 = cells.iter().zip(expected).map(|(&o, e)| (f64::from(o) - n * e).powi(2) / (n * e)).sum();
        // 3 degrees of freedom: P(χ² > 11.345) = 0.01.
        assert!(chi2 < 11.345, "chi2 = {chi2}, cells {cells:?}");
    }

    #[test]
    fn clone_replays_the_same_future() {
        let cfg = ScenarioConfig { volatility: 0.1, ..ScenarioConfig::default() };
        let mut a = MarketEnv::reset(&cfg, 8).unwrap();
        for _ in 0..10 {
            a.step(QuoteAction::new(0.2, 0.3)).unwrap();
        }
        let mut b = a.clone();
        for _ in 0..20 {
            assert_eq!(a.step(QuoteAction::new(0.1, 0.4)).unwrap(), b.step(QuoteAction::new(0.1, 0.4)).unwrap());
        }
    }

    fn any_config() -> impl Strategy<Value = ScenarioConfig> {
        (
            0.0..0.3f64,
            0.0..0.5f64,
            0.0..3.0f64,
            5.0..60.0f64,
            0.0..3.0f64,
            prop::sample::select(alloc::vec![0.01, 0.02]),
            1..12i32,
        )
            .prop_map(|(drift, volatility, jump_intensity, liquidity, k, dt, cap)| ScenarioConfig {
                drift,
                volatility,
                jump_intensity,
                jump_std: 0.05,
                base_intensity_buy: liquidity,
                base_intensity_sell: liquidity,
                spread_sensitivity: k,
                dt,
                inventory_cap: cap,
                ..ScenarioConfig::default()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn wealth_identity_and_inventory_cap(
            cfg in any_config(),
            seed in any::<u64>(),
            quotes in prop::collection::vec((0.0..1.0f64, 0.0..1.0f64), 1..8),
        ) {
            let mut env = MarketEnv::reset(&cfg, seed).unwrap();
            let w0 = env.state().wealth();
            let mut rewards = 0.0;
            let mut qs = Vec::new();
            let mut i = 0;
            while !env.is_done() {
                let (b, a) = quotes[i % quotes.len()];
                let out = env.step(QuoteAction::new(b, a)).unwrap();
                prop_assert!(out.next_state.inventory.abs() <= cfg.inventory_cap);
                prop_assert!(out.next_state.mid_price > 0.0);
                prop_assert!(out.intensities.0 >= cfg.base_intensity_buy);
                rewards += out.reward;
                qs.push(out.next_state.inventory);
                i += 1;
            }
            let wt = env.state().wealth();
            let lhs = rewards + inventory_penalty_sum(&cfg, &qs);
            prop_assert!((lhs - (wt - w0)).abs() < 1e-9 * (1.0 + wt.abs()), "{lhs} vs {}", wt - w0);
        }
    }
}
