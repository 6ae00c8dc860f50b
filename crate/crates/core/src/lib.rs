//! Desk-scale PointGoal navigation with recurrent PPO.
//!
//! The crate covers a grid-world simulator with depth ray sensing, rollout
//! collection (sequential and double-buffered), GAE with optional advantage
//! normalization, a GRU actor-critic with analytic gradients, the PPO learner
//! and an experiment harness with sweeps, evaluation and checkpoints.

// Config validation uses `!(x > 0.0)` style checks so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod advantage;
pub mod error;
pub mod harness;
pub mod navsim;
pub mod policy;
pub mod ppo;
pub mod rollout;

pub use error::{Error, Result};
