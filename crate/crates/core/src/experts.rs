//! Closed-form quoting experts.
//!
//! The `*_raw` functions return the formulas before clamping, which is what
//! the symmetry and skew properties are stated on. The public quote
//! functions clamp each side at zero (quoting at the mid).

#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::market::{QuoteAction, ScenarioConfig};

/// Risk aversion used when calibrating experts to a scenario.
pub const CALIBRATED_RISK_AVERSION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ExpertError {
    #[error("invalid expert parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: &'static str },
}

/// Teacher identity, stored as a 16-bit tag in datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u16)]
pub enum ExpertKind {
    AvellanedaStoikov = 0,
    Glft = 1,
    GlftDrift = 2,
    DirectPpo = 3,
}

impl ExpertKind {
    /// Fixed candidate ordering, also the final tie-break of the tournament.
    pub const ALL: [ExpertKind; 4] = [Self::AvellanedaStoikov, Self::Glft, Self::GlftDrift, Self::DirectPpo];

    pub fn tag(self) -> u16 {
        self as u16
    }

    pub fn from_tag(tag: u16) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.tag() == tag)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::AvellanedaStoikov => "AS",
            Self::Glft => "GLFT",
            Self::GlftDrift => "GLFT-drift",
            Self::DirectPpo => "PPO",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsParams {
    pub risk_aversion: f64,
    pub volatility: f64,
    pub order_decay: f64,
    pub horizon: f64,
}

impl AsParams {
    pub fn calibrated(config: &ScenarioConfig) -> Self {
        Self {
            risk_aversion: CALIBRATED_RISK_AVERSION,
            volatility: config.volatility,
            order_decay: config.spread_sensitivity,
            horizon: config.horizon,
        }
    }

    pub fn validate(&self) -> Result<(), ExpertError> {
        positive("risk_aversion", self.risk_aversion)?;
        positive("order_decay", self.order_decay)?;
        nonnegative("volatility", self.volatility)?;
        nonnegative("horizon", self.horizon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlftParams {
    pub risk_aversion: f64,
    pub volatility: f64,
    pub order_decay: f64,
    pub base_arrival: f64,
    /// Only read by the drift variant.
    pub drift: f64,
}

impl GlftParams {
    pub fn calibrated(config: &ScenarioConfig) -> Self {
        Self {
            risk_aversion: CALIBRATED_RISK_AVERSION,
            volatility: config.volatility,
            order_decay: config.spread_sensitivity,
            base_arrival: 0.5 * (config.base_intensity_buy + config.base_intensity_sell),
            drift: config.drift,
        }
    }

    pub fn validate(&self) -> Result<(), ExpertError> {
        positive("risk_aversion", self.risk_aversion)?;
        positive("order_decay", self.order_decay)?;
        positive("base_arrival", self.base_arrival)?;
        nonnegative("volatility", self.volatility)?;
        if !self.drift.is_finite() {
            return Err(ExpertError::InvalidParameter { field: "drift", reason: "must be finite" });
        }
        Ok(())
    }
}

fn positive(field: &'static str, v: f64) -> Result<(), ExpertError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ExpertError::InvalidParameter { field, reason: "must be positive and finite" })
    }
}

fn nonnegative(field: &'static str, v: f64) -> Result<(), ExpertError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ExpertError::InvalidParameter { field, reason: "must be nonnegative and finite" })
    }
}

fn clamped((bid, ask): (f64, f64)) -> QuoteAction {
    QuoteAction::new(bid.max(0.0), ask.max(0.0))
}

/// `(1/γ)·ln(1 + γ/k)`, the inventory-free half spread shared by all three models.
fn base_half_spread(gamma: f64, k: f64) -> f64 {
    (gamma / k).ln_1p() / gamma
}

/// Unclamped `(δ_bid, δ_ask)` at inventory `q` and time `t`.
pub fn as_quotes_raw(q: i32, t: f64, p: &AsParams) -> (f64, f64) {
    let tau = (p.horizon - t).max(0.0);
    let g_s2_tau = p.risk_aversion * p.volatility * p.volatility * tau;
    let base = 0.5 * g_s2_tau + base_half_spread(p.risk_aversion, p.order_decay);
    let skew = f64::from(q) * g_s2_tau;
    (base - skew, base + skew)
}

pub fn as_quotes(q: i32, t: f64, p: &AsParams) -> QuoteAction {
    clamped(as_quotes_raw(q, t, p))
}

/// `(c1, c2)`; `c2` carries the factor `γ` inside its square root.
pub fn glft_coefficients(p: &GlftParams) -> (f64, f64) {
    let (g, k) = (p.risk_aversion, p.order_decay);
    let c1 = base_half_spread(g, k);
    let c2 = (g / (2.0 * p.base_arrival * k) * (1.0 + g / k).powf(k / g + 1.0)).sqrt();
    (c1, c2)
}

pub fn glft_quotes_raw(q: i32, p: &GlftParams) -> (f64, f64) {
    let (c1, c2) = glft_coefficients(p);
    let half = c1 + 0.5 * p.volatility * c2;
    let skew = p.volatility * c2 * f64::from(q);
    (half + skew, half - skew)
}

pub fn glft_quotes(q: i32, p: &GlftParams) -> QuoteAction {
    clamped(glft_quotes_raw(q, p))
}

/// Unclamped drift-adjusted GLFT quotes. The root here has no `γ` factor,
/// unlike [`glft_coefficients`].
pub fn glft_drift_quotes_raw(q: i32, p: &GlftParams) -> Result<(f64, f64), ExpertError> {
    if !(p.volatility > 0.0) {
        return Err(ExpertError::InvalidParameter { field: "volatility", reason: "drift skew needs σ > 0" });
    }
    let (g, k, s) = (p.risk_aversion, p.order_decay, p.volatility);
    let root = (s * s / (2.0 * k * p.base_arrival) * (1.0 + g / k).powf(1.0 + k / g)).sqrt();
    let base = base_half_spread(g, k);
    let lean = p.drift / (g * s * s);
    let q = f64::from(q);
    let bid = base + (-lean + (2.0 * q + 1.0) / 2.0) * root;
    let ask = base + (lean - (2.0 * q - 1.0) / 2.0) * root;
    Ok((bid, ask))
}

pub fn glft_drift_quotes(q: i32, p: &GlftParams) -> Result<QuoteAction, ExpertError> {
    glft_drift_quotes_raw(q, p).map(clamped)
}

/// Both spreads uniform on `[0, range]`.
pub fn random_quotes<R: Rng + ?Sized>(rng: &mut R, range: f64) -> QuoteAction {
    QuoteAction::new(rng.random_range(0.0..=range), rng.random_range(0.0..=range))
}
