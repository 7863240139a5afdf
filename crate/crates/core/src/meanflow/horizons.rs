use serde::{Deserialize, Serialize};

use super::MeanFlowError;
use crate::market::STATE_DIM;

/// Width of one action row `(δ_bid, δ_ask)`.
pub const ACTION_DIM: usize = 2;

/// Observation, prediction and execution horizons of the chunked policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Horizons {
    pub obs: usize,
    pub pred: usize,
    pub exec: usize,
}

impl Default for Horizons {
    fn default() -> Self {
        Self { obs: 2, pred: 16, exec: 8 }
    }
}

impl Horizons {
    pub fn validate(&self) -> Result<(), MeanFlowError> {
        if self.obs == 0 || self.pred == 0 || self.exec == 0 {
            return Err(MeanFlowError::Horizons("all horizons must be positive"));
        }
        if self.obs - 1 + self.exec > self.pred {
            return Err(MeanFlowError::Horizons("execution slice [obs-1, obs-1+exec) must fit in the chunk"));
        }
        Ok(())
    }

    /// Length of the flattened observation window.
    pub fn obs_len(&self) -> usize {
        self.obs * STATE_DIM
    }

    /// Length of a flattened action chunk (also the noise dimension).
    pub fn chunk_len(&self) -> usize {
        self.pred * ACTION_DIM
    }

    /// Chunk rows executed after one generation.
    pub fn exec_rows(&self) -> core::ops::Range<usize> {
        self.obs - 1..self.obs - 1 + self.exec
    }
}
