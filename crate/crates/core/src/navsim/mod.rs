//! Miniature PointGoal navigation: occupancy-grid maps, geodesic distances,
//! depth ray casting, shaped rewards and SPL.

mod env;
mod episode;
pub mod geodesic;
mod map;
mod metrics;
mod source;

pub use env::{
    cast_ray, goal_polar, observe, Action, EpisodeOutcome, NavConfig, NavEnv, Observation,
    SensorConfig, StepResult,
};
pub use episode::{sample_episode, wrap_heading, Episode, Pose};
pub use geodesic::{geodesic_distance, PathCost};
pub use map::{GridMap, DEFAULT_CELL_SIZE};
pub use metrics::{compute_spl, success_rate};
pub use source::{AutoResetEnv, AutoStep, EpisodeSource};
