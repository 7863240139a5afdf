//! File formats, parallel runners and the command line around
//! [`finflow_core`].
//!
//! The pipeline is `gen-data → train → finetune → eval`, with
//! `bench-latency` timing the inference path of trained checkpoints. Every
//! command is a function in [`commands`] writing into an output directory;
//! the binary is a thin argument parser over them.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod dataset_file;
mod error;
pub mod frame;
pub mod output;
pub mod par;
pub mod pipeline;

pub use error::{Error, Result};
pub use finflow_core as core;
