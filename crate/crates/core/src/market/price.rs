use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use super::ScenarioConfig;

/// A pre-simulated mid-price path `S_0..S_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePath {
    pub prices: Vec<f64>,
    /// Number of steps that took the jump branch.
    pub jump_count: usize,
}

/// Jump-diffusion path: each step jumps with probability `λ_J·dt`
/// (`S·e^J`, `J ~ N(μ_J, σ_J²)`) and otherwise takes an exact GBM step.
pub fn simulate_price_path<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> PricePath {
    let n = config.steps();
    let dt = config.dt;
    let jump_prob = config.jump_intensity * dt;
    let drift_step = (config.drift - 0.5 * config.volatility * config.volatility) * dt;
    let diffusion_scale = config.volatility * dt.sqrt();

    let mut prices = Vec::with_capacity(n + 1);
    prices.push(config.initial_price);
    let mut jump_count = 0;
    let mut s = config.initial_price;
    for _ in 0..n {
        let u: f64 = rng.random();
        let log_step = if u < jump_prob {
            jump_count += 1;
            let z: f64 = rng.sample(StandardNormal);
            config.jump_mean + config.jump_std * z
        } else {
            let z: f64 = rng.sample(StandardNormal);
            drift_step + diffusion_scale * z
        };
        s *= log_step.exp();
        prices.push(s);
    }
    PricePath { prices, jump_count }
}
