//! Generalized advantage estimation and the advantage normalization
//! strategies.

mod gae;
mod normalize;

pub use gae::{compute_gae, GaeConfig};
pub use normalize::{normalize, NormalizationStrategy, RunningMoments, PER_MINIBATCH_EPS};
