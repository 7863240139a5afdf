#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::MarketError;

/// Every parameter of one simulated market.
///
/// Field names double as the keys of the text configuration format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Episode length `T`.
    pub horizon: f64,
    pub dt: f64,
    /// Drift `μ` of the log-price, per unit time.
    pub drift: f64,
    /// Volatility `σ` of the log-price, per √time.
    pub volatility: f64,
    /// Hurst exponent. Only 0.5 (standard Brownian increments) is simulated.
    pub hurst: f64,
    /// Jump intensity `λ_J`.
    pub jump_intensity: f64,
    /// Mean `μ_J` of the normal log-jump.
    pub jump_mean: f64,
    /// Standard deviation `σ_J` of the normal log-jump.
    pub jump_std: f64,
    /// Baseline intensity `μ_b` of orders hitting the bid.
    pub base_intensity_buy: f64,
    /// Baseline intensity `μ_a` of orders lifting the ask.
    pub base_intensity_sell: f64,
    pub self_excite_bb: f64,
    pub self_excite_aa: f64,
    /// Excitation of the ask side by bid events (`α_ab`).
    pub cross_excite_ab: f64,
    /// Excitation of the bid side by ask events (`α_ba`).
    pub cross_excite_ba: f64,
    /// Kernel decay `β`.
    pub decay: f64,
    /// Spread sensitivity `k` in `λ·e^{−kδ}`.
    pub spread_sensitivity: f64,
    pub initial_price: f64,
    pub initial_cash: f64,
    pub inventory_cap: i32,
    /// Quadratic inventory penalty `γ_pen` in the reward.
    pub inventory_penalty: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            horizon: 1.0,
            dt: 0.01,
            drift: 0.0,
            volatility: 0.02,
            hurst: 0.5,
            jump_intensity: 0.0,
            jump_mean: 0.0,
            jump_std: 0.02,
            base_intensity_buy: 25.0,
            base_intensity_sell: 25.0,
            self_excite_bb: 0.7,
            self_excite_aa: 0.7,
            cross_excite_ab: 0.3,
            cross_excite_ba: 0.3,
            decay: 0.1,
            spread_sensitivity: 1.5,
            initial_price: 100.0,
            initial_cash: 1000.0,
            inventory_cap: 10,
            inventory_penalty: 0.1,
        }
    }
}

impl ScenarioConfig {
    /// Number of decision steps `N = T/dt`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<(), MarketError> {
        let bad = |field: &'static str, reason: &'static str| Err(MarketError::InvalidConfig { field, reason });
        let finite = [
            ("horizon", self.horizon),
            ("dt", self.dt),
            ("drift", self.drift),
            ("volatility", self.volatility),
            ("hurst", self.hurst),
            ("jump_intensity", self.jump_intensity),
            ("jump_mean", self.jump_mean),
            ("jump_std", self.jump_std),
            ("base_intensity_buy", self.base_intensity_buy),
            ("base_intensity_sell", self.base_intensity_sell),
            ("self_excite_bb", self.self_excite_bb),
            ("self_excite_aa", self.self_excite_aa),
            ("cross_excite_ab", self.cross_excite_ab),
            ("cross_excite_ba", self.cross_excite_ba),
            ("decay", self.decay),
            ("spread_sensitivity", self.spread_sensitivity),
            ("initial_price", self.initial_price),
            ("initial_cash", self.initial_cash),
            ("inventory_penalty", self.inventory_penalty),
        ];
        for (field, value) in finite {
            if !value.is_finite() {
                return bad(field, "must be finite");
            }
        }
        if self.horizon <= 0.0 {
            return bad("horizon", "must be positive");
        }
        if self.dt <= 0.0 {
            return bad("dt", "must be positive");
        }
        let ratio = self.horizon / self.dt;
        if ratio.round() < 1.0 || (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return bad("dt", "horizon/dt must be a positive integer");
        }
        if (self.hurst - 0.5).abs() > 1e-12 {
            return bad("hurst", "only H = 0.5 is supported");
        }
        if self.volatility < 0.0 {
            return bad("volatility", "must be nonnegative");
        }
        if self.jump_intensity < 0.0 {
            return bad("jump_intensity", "must be nonnegative");
        }
        if self.jump_std < 0.0 {
            return bad("jump_std", "must be nonnegative");
        }
        if self.base_intensity_buy <= 0.0 {
            return bad("base_intensity_buy", "must be positive");
        }
        if self.base_intensity_sell <= 0.0 {
            return bad("base_intensity_sell", "must be positive");
        }
        for (field, value) in [
            ("self_excite_bb", self.self_excite_bb),
            ("self_excite_aa", self.self_excite_aa),
            ("cross_excite_ab", self.cross_excite_ab),
            ("cross_excite_ba", self.cross_excite_ba),
        ] {
            if value < 0.0 {
                return bad(field, "must be nonnegative");
            }
        }
        if self.decay <= 0.0 {
            return bad("decay", "must be positive");
        }
        if self.spread_sensitivity < 0.0 {
            return bad("spread_sensitivity", "must be nonnegative");
        }
        if self.initial_price <= 0.0 {
            return bad("initial_price", "must be positive");
        }
        if self.inventory_cap < 0 {
            return bad("inventory_cap", "must be nonnegative");
        }
        if self.inventory_penalty < 0.0 {
            return bad("inventory_penalty", "must be nonnegative");
        }
        Ok(())
    }
}
