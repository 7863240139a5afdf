use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::market::STATE_DIM;
use crate::meanflow::ACTION_DIM;

/// Below this a spread of observations is treated as constant.
const MIN_SCALE: f64 = 1e-8;

/// Normalization maps shared by a dataset and every model trained on it.
///
/// Actions map linearly from `[act_min, act_max]` onto `[−1, 1]`;
/// observations are standardized with the dataset moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub obs_min: [f64; STATE_DIM],
    pub obs_max: [f64; STATE_DIM],
    pub obs_mean: [f64; STATE_DIM],
    pub obs_std: [f64; STATE_DIM],
    pub act_min: [f64; ACTION_DIM],
    pub act_max: [f64; ACTION_DIM],
}

impl NormStats {
    /// Identity-like stats: actions in `[lo, hi]`, observations untouched.
    pub fn with_action_range(lo: f64, hi: f64) -> Self {
        Self {
            obs_min: [0.0; STATE_DIM],
            obs_max: [0.0; STATE_DIM],
            obs_mean: [0.0; STATE_DIM],
            obs_std: [1.0; STATE_DIM],
            act_min: [lo; ACTION_DIM],
            act_max: [hi; ACTION_DIM],
        }
    }

    /// Moments and ranges of `states` (rows of `STATE_DIM`) and `actions`
    /// (rows of `ACTION_DIM`). A constant action dimension gets a unit
    /// half-width around its value so the map stays invertible.
    pub fn from_data<'a>(
        states: impl IntoIterator<Item = &'a [f64; STATE_DIM]>,
        actions: impl IntoIterator<Item = &'a [f64; ACTION_DIM]>,
    ) -> Result<Self, DatasetError> {
        let mut obs_min = [f64::INFINITY; STATE_DIM];
        let mut obs_max = [f64::NEG_INFINITY; STATE_DIM];
        let mut n = 0usize;
        let mut mean = [0.0; STATE_DIM];
        let mut m2 = [0.0; STATE_DIM];
        for row in states {
            n += 1;
            for d in 0..STATE_DIM {
                let x = row[d];
                obs_min[d] = obs_min[d].min(x);
                obs_max[d] = obs_max[d].max(x);
                // Welford update.
                let delta = x - mean[d];
                mean[d] += delta / n as f64;
                m2[d] += delta * (x - mean[d]);
            }
        }
        if n == 0 {
            return Err(DatasetError::Empty("observations"));
        }
        let obs_std = core::array::from_fn(|d| {
            let sd = (m2[d] / n as f64).sqrt();
            if sd > MIN_SCALE {
                sd
            } else {
                1.0
            }
        });

        let mut act_min = [f64::INFINITY; ACTION_DIM];
        let mut act_max = [f64::NEG_INFINITY; ACTION_DIM];
        let mut any = false;
        for row in actions {
            any = true;
            for d in 0..ACTION_DIM {
                act_min[d] = act_min[d].min(row[d]);
                act_max[d] = act_max[d].max(row[d]);
            }
        }
        if !any {
            return Err(DatasetError::Empty("actions"));
        }
        for d in 0..ACTION_DIM {
            if act_max[d] - act_min[d] < MIN_SCALE {
                let c = 0.5 * (act_min[d] + act_max[d]);
                act_min[d] = c - 1.0;
                act_max[d] = c + 1.0;
            }
        }
        let stats = Self { obs_min, obs_max, obs_mean: mean, obs_std, act_min, act_max };
        stats.validate()?;
        Ok(stats)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let finite =
            self.obs_mean.iter().chain(&self.obs_std).chain(&self.act_min).chain(&self.act_max).all(|v| v.is_finite());
        if !finite {
            return Err(DatasetError::InvalidStats("non-finite entry"));
        }
        if self.obs_std.iter().any(|&s| !(s > 0.0)) {
            return Err(DatasetError::InvalidStats("observation std must be positive"));
        }
        if (0..ACTION_DIM).any(|d| !(self.act_max[d] > self.act_min[d])) {
            return Err(DatasetError::InvalidStats("action range must be non-degenerate"));
        }
        if (0..STATE_DIM).any(|d| self.obs_min[d] > self.obs_max[d]) {
            return Err(DatasetError::InvalidStats("obs_min exceeds obs_max"));
        }
        Ok(())
    }

    /// Standardizes a flattened window in place (any number of rows).
    pub fn normalize_obs_in_place(&self, window: &mut [f64]) {
        for row in window.chunks_exact_mut(STATE_DIM) {
            for ((v, m), sd) in row.iter_mut().zip(&self.obs_mean).zip(&self.obs_std) {
                *v = (*v - m) / sd;
            }
        }
    }

    pub fn normalize_obs(&self, window: &[f64]) -> Vec<f64> {
        let mut out = window.to_vec();
        self.normalize_obs_in_place(&mut out);
        out
    }

    /// Maps a flattened chunk (rows of `ACTION_DIM`) into `[−1, 1]` coordinates.
    pub fn normalize_actions_in_place(&self, chunk: &mut [f64]) {
        for row in chunk.chunks_exact_mut(ACTION_DIM) {
            for ((v, lo), hi) in row.iter_mut().zip(&self.act_min).zip(&self.act_max) {
                *v = 2.0 * (*v - lo) / (hi - lo) - 1.0;
            }
        }
    }

    pub fn unnormalize_actions_in_place(&self, chunk: &mut [f64]) {
        for row in chunk.chunks_exact_mut(ACTION_DIM) {
            for ((v, lo), hi) in row.iter_mut().zip(&self.act_min).zip(&self.act_max) {
                *v = lo + (*v + 1.0) * 0.5 * (hi - lo);
            }
        }
    }

    pub fn unnormalize_action(&self, row: [f64; ACTION_DIM]) -> [f64; ACTION_DIM] {
        let mut r = row;
        self.unnormalize_actions_in_place(&mut r);
        r
    }
}
