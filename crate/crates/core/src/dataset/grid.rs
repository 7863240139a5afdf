use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::market::ScenarioConfig;

/// Axes of the training grid. Expansion order is drift-major, then
/// volatility, jump intensity, time step and liquidity (last, fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub drift: Vec<f64>,
    pub volatility: Vec<f64>,
    pub jump_intensity: Vec<f64>,
    pub dt: Vec<f64>,
    pub liquidity: Vec<f64>,
    pub hurst: f64,
    pub self_excite: f64,
    pub cross_excite: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            drift: alloc::vec![0.01, 0.05, 0.2],
            volatility: alloc::vec![0.05, 0.1, 0.3],
            jump_intensity: alloc::vec![0.0, 0.02],
            dt: alloc::vec![0.01, 0.02],
            liquidity: alloc::vec![10.0, 20.0, 40.0],
            hurst: 0.5,
            self_excite: 0.7,
            cross_excite: 0.3,
        }
    }
}

impl GridSpec {
    pub fn len(&self) -> usize {
        self.drift.len() * self.volatility.len() * self.jump_intensity.len() * self.dt.len() * self.liquidity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every combination over `base`, in the documented order.
    pub fn expand(&self, base: &ScenarioConfig) -> Vec<ScenarioConfig> {
        let mut out = Vec::with_capacity(self.len());
        for &drift in &self.drift {
            for &volatility in &self.volatility {
                for &jump_intensity in &self.jump_intensity {
                    for &dt in &self.dt {
                        for &liquidity in &self.liquidity {
                            out.push(ScenarioConfig {
                                drift,
                                volatility,
                                jump_intensity,
                                dt,
                                base_intensity_buy: liquidity,
                                base_intensity_sell: liquidity,
                                hurst: self.hurst,
                                self_excite_bb: self.self_excite,
                                self_excite_aa: self.self_excite,
                                cross_excite_ab: self.cross_excite,
                                cross_excite_ba: self.cross_excite,
                                ..base.clone()
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

/// The 108 training scenarios over default market settings.
pub fn build_scenario_grid() -> Vec<ScenarioConfig> {
    GridSpec::default().expand(&ScenarioConfig::default())
}
