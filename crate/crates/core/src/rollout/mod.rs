//! Vectorized experience collection and environment-wise minibatching.

mod buffer;
mod collector;

pub use buffer::{minibatch_split, RolloutBuffer, TransitionBatch};
pub use collector::{Collector, Latency, SamplerMode, SamplerStats};
