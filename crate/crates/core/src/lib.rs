//! Core of the FinFlow market-making stack.
//!
//! Everything in this crate is pure computation over `alloc` collections:
//! the Hawkes/jump-diffusion market simulator, closed-form quoting experts,
//! a small dense-network substrate, the MeanFlow action-chunk policy,
//! noise-space PPO fine-tuning and the benchmark metrics. File formats,
//! parallel runners and the command line live in the `finflow` crate.
#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// `num_traits::Float` supplies float math without std. The imports are
// marked `allow(unused_imports)` because the inherent std methods take
// over whenever std is linked anywhere in the build.

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dataset;
pub mod evaluation;
pub mod experts;
pub mod market;
pub mod meanflow;
pub mod noise_rl;
pub mod numerics;
pub mod seed;
pub mod strategy;
