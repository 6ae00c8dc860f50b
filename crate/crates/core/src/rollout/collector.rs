use std::ops::Range;
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::buffer::RolloutBuffer;
use crate::error::{Error, Result};
use crate::navsim::{Action, AutoResetEnv, AutoStep, EpisodeOutcome, Observation};
use crate::policy::{ActMode, Policy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMode {
    Sequential,
    DoubleBuffered,
}

impl SamplerMode {
    pub fn name(self) -> &'static str {
        match self {
            SamplerMode::Sequential => "sequential",
            SamplerMode::DoubleBuffered => "double_buffered",
        }
    }
}

/// Artificial delays: `env` per environment step, `inference` per policy call
/// (one call covers every environment acted on together).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Latency {
    pub env: Duration,
    pub inference: Duration,
}

impl Latency {
    pub fn from_millis(env_ms: f64, infer_ms: f64) -> Self {
        Self { env: Duration::from_secs_f64(env_ms / 1e3), inference: Duration::from_secs_f64(infer_ms / 1e3) }
    }
}

fn pause(d: Duration) {
    if !d.is_zero() {
        thread::sleep(d);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SamplerStats {
    pub total_steps: u64,
    pub wall_seconds: f64,
    pub steps_per_second: f64,
}

impl SamplerStats {
    fn record(&mut self, steps: u64, seconds: f64) {
        self.total_steps += steps;
        self.wall_seconds += seconds;
        self.steps_per_second = if self.wall_seconds > 0.0 { self.total_steps as f64 / self.wall_seconds } else { 0.0 };
    }
}

/// Acting-side state of one environment.
#[derive(Debug, Clone)]
struct Slot {
    obs: Observation,
    hidden: Vec<f64>,
    prev_action: Option<usize>,
    mask: f64,
    rng: ChaCha8Rng,
}

/// NumSim auto-resetting environments plus the per-env recurrent state that
/// persists across rollouts.
#[derive(Debug)]
pub struct Collector {
    envs: Vec<AutoResetEnv>,
    slots: Vec<Slot>,
    latency: Latency,
    stats: SamplerStats,
    finished: Vec<EpisodeOutcome>,
}

/// Seed for environment `e`'s action-sampling stream.
fn action_seed(seed: u64, e: usize) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(e as u64 + 1)
}

impl Collector {
    /// `seed` drives action sampling; environments carry their own episode
    /// streams.
    pub fn new(envs: Vec<AutoResetEnv>, state_size: usize, seed: u64, latency: Latency) -> Result<Self> {
        if envs.is_empty() {
            return Err(Error::Shape("collector needs at least one environment".into()));
        }
        let slots = envs
            .iter()
            .enumerate()
            .map(|(e, env)| Slot {
                obs: env.observe(),
                hidden: vec![0.0; state_size],
                prev_action: None,
                mask: 0.0,
                rng: ChaCha8Rng::seed_from_u64(action_seed(seed, e)),
            })
            .collect();
        Ok(Self { envs, slots, latency, stats: SamplerStats::default(), finished: Vec::new() })
    }

    pub fn num_envs(&self) -> usize {
        self.envs.len()
    }

    pub fn stats(&self) -> SamplerStats {
        self.stats
    }

    pub fn envs(&self) -> &[AutoResetEnv] {
        &self.envs
    }

    /// Outcomes of episodes completed since the last call.
    pub fn take_finished(&mut self) -> Vec<EpisodeOutcome> {
        std::mem::take(&mut self.finished)
    }

    pub fn collect(&mut self, policy: &mut Policy, length: usize, mode: SamplerMode) -> Result<RolloutBuffer> {
        match mode {
            SamplerMode::Sequential => self.collect_sequential(policy, length),
            SamplerMode::DoubleBuffered => self.collect_double_buffered(policy, length),
        }
    }

    fn begin(&self, policy: &Policy, length: usize) -> Result<RolloutBuffer> {
        if length == 0 {
            return Err(Error::Shape("rollout length must be positive".into()));
        }
        let n_rays = self.slots[0].obs.depth.len();
        let ss = policy.state_size();
        let mut buf = RolloutBuffer::new(self.envs.len(), length, n_rays, ss);
        for (e, s) in self.slots.iter().enumerate() {
            buf.start_hidden[e * ss..(e + 1) * ss].copy_from_slice(&s.hidden);
            buf.start_prev_action[e] = s.prev_action;
        }
        Ok(buf)
    }

    /// Acts on environments `range` at step `t`, recording the pre-step
    /// fields. One inference call.
    fn act_range(
        slots: &mut [Slot],
        range: Range<usize>,
        policy: &mut Policy,
        buf: &mut RolloutBuffer,
        t: usize,
        latency: Latency,
    ) -> Result<Vec<Action>> {
        pause(latency.inference);
        let n_rays = buf.n_rays;
        let mut actions = Vec::with_capacity(range.len());
        for e in range {
            let s = &mut slots[e];
            let i = buf.index(e, t);
            let out = policy.act(
                &s.obs,
                s.prev_action,
                &mut s.hidden,
                s.mask,
                ActMode::Train,
                &mut s.rng,
                Some(&mut buf.depth[i * n_rays..(i + 1) * n_rays]),
            )?;
            buf.goal[i] = s.obs.goal_polar;
            buf.actions[i] = out.action;
            buf.log_probs[i] = out.log_prob;
            buf.values[i] = out.value;
            buf.masks[i] = s.mask;
            actions.push(Action::from_index(out.action).expect("policy emits valid actions"));
        }
        Ok(actions)
    }

    fn absorb(
        slots: &mut [Slot],
        start: usize,
        steps: Vec<AutoStep>,
        buf: &mut RolloutBuffer,
        t: usize,
        finished: &mut Vec<EpisodeOutcome>,
    ) {
        for (k, step) in steps.into_iter().enumerate() {
            let e = start + k;
            let i = buf.index(e, t);
            let s = &mut slots[e];
            buf.rewards[i] = step.result.reward;
            s.prev_action = Some(buf.actions[i]);
            s.mask = if step.result.done { 0.0 } else { 1.0 };
            s.obs = step.next_observation;
            if let Some(o) = step.finished {
                finished.push(o);
            }
        }
    }

    fn step_envs(envs: &mut [AutoResetEnv], actions: &[Action], latency: Latency) -> Result<Vec<AutoStep>> {
        envs.iter_mut()
            .zip(actions)
            .map(|(env, &a)| {
                pause(latency.env);
                env.step(a)
            })
            .collect()
    }

    fn finish(&mut self, policy: &mut Policy, buf: &mut RolloutBuffer, started: Instant) {
        for (e, s) in self.slots.iter().enumerate() {
            buf.bootstrap_values[e] = policy.value(&s.obs, s.prev_action, &s.hidden, s.mask);
            buf.bootstrap_masks[e] = s.mask;
        }
        self.stats.record(buf.len() as u64, started.elapsed().as_secs_f64());
    }

    /// Acts on every environment, then steps every environment, in env order,
    /// all on the calling thread.
    pub fn collect_sequential(&mut self, policy: &mut Policy, length: usize) -> Result<RolloutBuffer> {
        let started = Instant::now();
        let mut buf = self.begin(policy, length)?;
        let n = self.envs.len();
        for t in 0..length {
            let actions = Self::act_range(&mut self.slots, 0..n, policy, &mut buf, t, self.latency)?;
            let steps = Self::step_envs(&mut self.envs, &actions, self.latency)?;
            Self::absorb(&mut self.slots, 0, steps, &mut buf, t, &mut self.finished);
        }
        self.finish(policy, &mut buf, started);
        Ok(buf)
    }

    /// Splits the environments into two halves, each stepped by its own
    /// worker thread, and interleaves inference for one half with simulation
    /// of the other. Inference and statistics updates happen in the same order
    /// as in [`Collector::collect_sequential`], so the buffers match exactly.
    pub fn collect_double_buffered(&mut self, policy: &mut Policy, length: usize) -> Result<RolloutBuffer> {
        let n = self.envs.len();
        if !n.is_multiple_of(2) {
            return Err(Error::Shape(format!("double-buffered sampling needs an even env count, got {n}")));
        }
        let started = Instant::now();
        let mut buf = self.begin(policy, length)?;
        let half = n / 2;
        let latency = self.latency;
        let Self { envs, slots, finished, .. } = self;
        let (group_a, group_b) = envs.split_at_mut(half);

        thread::scope(|scope| -> Result<()> {
            let mut links = Vec::new();
            for group in [group_a, group_b] {
                let (to_worker, worker_rx) = mpsc::channel::<Vec<Action>>();
                let (worker_tx, from_worker) = mpsc::channel::<Result<Vec<AutoStep>>>();
                scope.spawn(move || {
                    for actions in worker_rx {
                        let out = Self::step_envs(group, &actions, latency);
                        let failed = out.is_err();
                        if worker_tx.send(out).is_err() || failed {
                            break;
                        }
                    }
                });
                links.push((to_worker, from_worker));
            }
            let ranges = [0..half, half..n];
            let send = |g: usize, actions: Vec<Action>| {
                links[g].0.send(actions).map_err(|_| Error::Shape("sampler worker stopped".into()))
            };
            for (g, range) in ranges.iter().enumerate() {
                let actions = Self::act_range(slots, range.clone(), policy, &mut buf, 0, latency)?;
                send(g, actions)?;
            }
            for t in 0..length {
                for (g, range) in ranges.iter().enumerate() {
                    let steps = links[g]
                        .1
                        .recv()
                        .map_err(|_| Error::Shape("sampler worker stopped".into()))??;
                    Self::absorb(slots, range.start, steps, &mut buf, t, finished);
                    if t + 1 < length {
                        let actions = Self::act_range(slots, range.clone(), policy, &mut buf, t + 1, latency)?;
                        send(g, actions)?;
                    }
                }
            }
            // Dropping the senders lets the workers exit.
            drop(links);
            Ok(())
        })?;
        self.finish(policy, &mut buf, started);
        Ok(buf)
    }
}
