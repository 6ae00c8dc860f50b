use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::env::{Action, EpisodeOutcome, NavConfig, NavEnv, Observation, StepResult};
use super::episode::sample_episode;
use super::map::GridMap;
use crate::error::Result;

/// Endless stream of training episodes drawn from a fixed set of maps.
#[derive(Debug, Clone)]
pub struct EpisodeSource {
    maps: Arc<Vec<Arc<GridMap>>>,
    rng: ChaCha8Rng,
    min_geodesic: f64,
    max_steps: usize,
}

impl EpisodeSource {
    pub fn new(maps: Arc<Vec<Arc<GridMap>>>, seed: u64, min_geodesic: f64, max_steps: usize) -> Self {
        assert!(!maps.is_empty(), "episode source needs at least one map");
        Self { maps, rng: ChaCha8Rng::seed_from_u64(seed), min_geodesic, max_steps }
    }

    pub fn next_env(&mut self, config: NavConfig) -> Result<NavEnv> {
        let map = self.maps[self.rng.gen_range(0..self.maps.len())].clone();
        let episode = sample_episode(&map, &mut self.rng, self.min_geodesic, self.max_steps)?;
        NavEnv::new(config, map, episode)
    }
}

/// A training environment that starts a fresh episode whenever one ends.
#[derive(Debug, Clone)]
pub struct AutoResetEnv {
    config: NavConfig,
    source: EpisodeSource,
    env: NavEnv,
}

/// Result of one auto-resetting step. `next_observation` belongs to the new
/// episode when `result.done` is set.
#[derive(Debug, Clone)]
pub struct AutoStep {
    pub result: StepResult,
    pub next_observation: Observation,
    pub finished: Option<EpisodeOutcome>,
}

impl AutoResetEnv {
    pub fn new(config: NavConfig, mut source: EpisodeSource) -> Result<Self> {
        let env = source.next_env(config)?;
        Ok(Self { config, source, env })
    }

    pub fn env(&self) -> &NavEnv {
        &self.env
    }

    pub fn observe(&self) -> Observation {
        self.env.observe()
    }

    pub fn step(&mut self, action: Action) -> Result<AutoStep> {
        let result = self.env.step(action)?;
        if result.done {
            let finished = self.env.outcome();
            self.env = self.source.next_env(self.config)?;
            Ok(AutoStep { next_observation: self.env.observe(), result, finished: Some(finished) })
        } else {
            Ok(AutoStep { next_observation: result.observation.clone(), result, finished: None })
        }
    }
}
