//! Recurrent actor-critic with manual backpropagation over a flat parameter
//! vector.

mod encoder;
mod init;
pub(crate) mod kernels;
mod layers;
mod layout;
mod network;
mod obs_norm;

pub use encoder::{Encoder, EncoderKind};
pub use layout::{ParamLayout, TensorSpec};
pub use network::{
    ActMode, ActOutput, ActionDistribution, BatchForward, Network, Policy, PolicyConfig,
    PolicyParams, SequenceEval, Workspace, N_ACTIONS,
};
pub use obs_norm::{normalize_obs, RunningObsStats, OBS_NORM_EPS};
