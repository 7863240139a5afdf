//! The pre-trained generative policy: a FiLM-conditioned average-velocity
//! network trained with the MeanFlow identity and sampled in one step.

mod horizons;
mod net;
mod policy;
mod train;

pub use horizons::{Horizons, ACTION_DIM};
pub use net::{VelocityArch, VelocityNet, VelocityTrace};
pub use policy::{ChunkedQuoter, GaussianNoise, MeanFlowPolicy, NoiseSource};
pub use train::{
    flow_sample, flow_sample_at, meanflow_target, sample_times, train, FlowSample, MeanFlowTrainer, TrainConfig,
    TrainingSet, BOUNDARY_FRACTION,
};

use crate::numerics::NumericsError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeanFlowError {
    #[error("invalid horizons: {0}")]
    Horizons(&'static str),
    #[error("training set is empty")]
    EmptyDataset,
    #[error("non-finite loss; update skipped")]
    NonFiniteLoss,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
