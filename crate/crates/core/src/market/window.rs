use alloc::collections::VecDeque;
use alloc::vec::Vec;

use super::{MarketState, STATE_DIM};

/// The last `len` market states, oldest first.
///
/// A fresh window is padded by repeating the reset state so its shape never
/// changes over an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationWindow {
    rows: VecDeque<[f64; STATE_DIM]>,
}

impl ObservationWindow {
    /// # Panics
    /// If `len` is zero.
    pub fn new(len: usize, initial: &MarketState) -> Self {
        assert!(len > 0, "observation window needs at least one row");
        let mut rows = VecDeque::with_capacity(len);
        rows.extend(core::iter::repeat_n(initial.features(), len));
        Self { rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, state: &MarketState) {
        self.rows.pop_front();
        self.rows.push_back(state.features());
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64; STATE_DIM]> {
        self.rows.iter()
    }

    /// Row-major flattening, `len × STATE_DIM` values.
    pub fn flat(&self) -> Vec<f64> {
        self.rows.iter().flatten().copied().collect()
    }

    pub fn write_flat(&self, out: &mut [f64]) {
        assert_eq!(out.len(), self.rows.len() * STATE_DIM);
        for (chunk, row) in out.chunks_exact_mut(STATE_DIM).zip(&self.rows) {
            chunk.copy_from_slice(row);
        }
    }
}
