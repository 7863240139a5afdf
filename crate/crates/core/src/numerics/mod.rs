//! Dense-network substrate shared by every learned component.

mod adam;
mod dense;
mod film;
pub mod gradcheck;

pub use adam::{AdamConfig, AdamState};
pub use dense::{Activation, DenseNet, DerivativeMode, ForwardTrace, FD_STEP};
pub use film::FilmLayer;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NumericsError {
    #[error("{what}: expected length {expected}, got {got}")]
    DimensionMismatch { what: &'static str, expected: usize, got: usize },
    #[error("invalid architecture: {0}")]
    Architecture(&'static str),
    #[error("backward called without a cached forward pass")]
    NotCached,
    #[error("forward trace does not belong to this network")]
    StaleTrace,
    #[error("non-finite gradient at index {index}; update rejected")]
    NonFiniteGradient { index: usize },
}
