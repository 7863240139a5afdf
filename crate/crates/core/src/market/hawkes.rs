#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// Orders arriving at our bid (intensity `λ_b`); a fill buys one share.
    Buy,
    /// Orders arriving at our ask (intensity `λ_a`); a fill sells one share.
    Sell,
}

/// Recursive form of the exponential-kernel sums.
///
/// `excitation_buy` holds `Σ_{N_b} α_bb e^{−β(t−tᵢ)} + Σ_{N_a} α_ba e^{−β(t−tⱼ)}`
/// at the current time, and symmetrically for the sell side, so each step
/// costs O(1) regardless of history length.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct HawkesState {
    pub excitation_buy: f64,
    pub excitation_sell: f64,
}

impl HawkesState {
    pub fn intensity(&self, side: Side, config: &ScenarioConfig) -> f64 {
        match side {
            Side::Buy => config.base_intensity_buy + self.excitation_buy,
            Side::Sell => config.base_intensity_sell + self.excitation_sell,
        }
    }

    /// Moves the state forward by `elapsed` and then registers the events
    /// stamped at the new time (which therefore enter with full weight).
    pub fn advance(&mut self, config: &ScenarioConfig, elapsed: f64, buy_event: bool, sell_event: bool) {
        let decay = (-config.decay * elapsed).exp();
        self.excitation_buy *= decay;
        self.excitation_sell *= decay;
        if buy_event {
            self.excitation_buy += config.self_excite_bb;
            self.excitation_sell += config.cross_excite_ab;
        }
        if sell_event {
            self.excitation_sell += config.self_excite_aa;
            self.excitation_buy += config.cross_excite_ba;
        }
    }
}


#[cfg(test)]
mod oracle {
    use alloc::vec::Vec;

    use proptest::prelude::*;
    use rand::Rng as _;

    use super::*;
    use crate::seed;

    /// Direct evaluation of both kernel sums over stored event times.
    fn naive(config: &ScenarioConfig, now: f64, buys: &[f64], sells: &[f64]) -> (f64, f64) {
        let kernel = |times: &[f64], alpha: f64| -> f64 {
            times.iter().map(|&ti| alpha * (-config.decay * (now - ti)).exp()).sum()
        };
        (
            config.base_intensity_buy + kernel(buys, config.self_excite_bb) + kernel(sells, config.cross_excite_ba),
            config.base_intensity_sell + kernel(sells, config.self_excite_aa) + kernel(buys, config.cross_excite_ab),
        )
    }

    fn check_history(config: &ScenarioConfig, stream: u64) -> f64 {
        let mut rng = seed::derived_rng(stream, 0, 0);
        let mut h = HawkesState::default();
        let (mut buys, mut sells) = (Vec::new(), Vec::new());
        let mut now = 0.0;
        let mut worst: f64 = 0.0;
        while buys.len() + sells.len() < 100 {
            let gap = rng.random_range(0.0..0.5);
            let buy = rng.random_bool(0.5);
            let sell = rng.random_bool(0.3);
            h.advance(config, gap, buy, sell);
            now += gap;
            if buy {
                buys.push(now);
            }
            if sell {
                sells.push(now);
            }
            let (nb, na) = naive(config, now, &buys, &sells);
            worst = worst
                .max((h.intensity(Side::Buy, config) - nb).abs())
                .max((h.intensity(Side::Sell, config) - na).abs());
        }
        worst
    }

    #[test]
    fn recursion_matches_naive_sum() {
        let cfg = ScenarioConfig::default();
        for stream in 0..50 {
            assert!(check_history(&cfg, stream) < 1e-10);
        }
    }

    proptest! {
        #[test]
        fn recursion_matches_naive_sum_for_any_kernel(
            a_bb in 0.0..2.0f64, a_aa in 0.0..2.0f64, a_ab in 0.0..2.0f64, a_ba in 0.0..2.0f64,
            decay in 0.01..5.0f64, stream in any::<u64>(),
        ) {
            let cfg = ScenarioConfig {
                self_excite_bb: a_bb,
                self_excite_aa: a_aa,
                cross_excite_ab: a_ab,
                cross_excite_ba: a_ba,
                decay,
                ..ScenarioConfig::default()
            };
            prop_assert!(check_history(&cfg, stream) < 1e-10);
        }
    }
}
