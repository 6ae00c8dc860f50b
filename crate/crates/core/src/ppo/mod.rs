//! PPO learner: clipped surrogate with analytic gradients, Adam, global norm
//! clipping and linear lr/clip decay.

mod adam;
mod config;
mod loss;
mod schedule;
mod update;

pub use adam::{Adam, AdamConfig};
pub use config::{HyperSet, PpoConfig};
pub use loss::{ppo_loss, LossBreakdown, LossOutput};
pub use schedule::{schedule, Schedules};
pub use update::{clip_grad_norm, Learner, UpdateReport};
