use rand::seq::SliceRandom;
use rand::Rng;

use crate::advantage::{compute_gae, GaeConfig};
use crate::error::{Error, Result};

/// Fixed-shape experience store for `num_envs x length` transitions.
///
/// Per-step data is env-major: step `t` of env `e` sits at `e * length + t`.
/// `depth` holds the normalized depth vector the encoder consumed.
/// `masks[e * length + t]` is 0 when step `t` starts a new episode.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBuffer {
    pub num_envs: usize,
    pub length: usize,
    pub n_rays: usize,
    pub state_size: usize,
    pub depth: Vec<f64>,
    pub goal: Vec<(f64, f64)>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub masks: Vec<f64>,
    /// Recurrent state per env captured before the first step.
    pub start_hidden: Vec<f64>,
    pub start_prev_action: Vec<Option<usize>>,
    pub bootstrap_values: Vec<f64>,
    /// Mask of the observation following the last step (0 if an episode
    /// ended on the last step).
    pub bootstrap_masks: Vec<f64>,
    pub advantages: Option<Vec<f64>>,
    pub returns: Option<Vec<f64>>,
}

impl RolloutBuffer {
    pub fn new(num_envs: usize, length: usize, n_rays: usize, state_size: usize) -> Self {
        let n = num_envs * length;
        Self {
            num_envs,
            length,
            n_rays,
            state_size,
            depth: vec![0.0; n * n_rays],
            goal: vec![(0.0, 0.0); n],
            actions: vec![0; n],
            log_probs: vec![0.0; n],
            values: vec![0.0; n],
            rewards: vec![0.0; n],
            masks: vec![0.0; n],
            start_hidden: vec![0.0; num_envs * state_size],
            start_prev_action: vec![None; num_envs],
            bootstrap_values: vec![0.0; num_envs],
            bootstrap_masks: vec![0.0; num_envs],
            advantages: None,
            returns: None,
        }
    }

    pub fn len(&self) -> usize {
        self.num_envs * self.length
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, env: usize, t: usize) -> usize {
        env * self.length + t
    }

    fn rows(&self, data: &[f64]) -> Vec<Vec<f64>> {
        data.chunks(self.length).map(<[f64]>::to_vec).collect()
    }

    /// `continues[e][t]` = mask of the step after `t`.
    pub fn continuation_masks(&self) -> Vec<Vec<f64>> {
        (0..self.num_envs)
            .map(|e| {
                (0..self.length)
                    .map(|t| {
                        if t + 1 < self.length {
                            self.masks[self.index(e, t + 1)]
                        } else {
                            self.bootstrap_masks[e]
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Runs GAE over the whole buffer and stores advantages and returns.
    pub fn compute_advantages(&mut self, cfg: &GaeConfig) -> Result<()> {
        let (adv, ret) = compute_gae(
            &self.rows(&self.rewards),
            &self.rows(&self.values),
            &self.continuation_masks(),
            &self.bootstrap_values,
            cfg,
        )?;
        self.advantages = Some(adv.concat());
        self.returns = Some(ret.concat());
        Ok(())
    }
}

/// Whole-sequence slice of a rollout for a subset of environments.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionBatch {
    pub env_ids: Vec<usize>,
    pub seq_len: usize,
    pub n_rays: usize,
    pub state_size: usize,
    pub depth: Vec<f64>,
    pub goal: Vec<(f64, f64)>,
    pub actions: Vec<usize>,
    pub masks: Vec<f64>,
    pub old_log_probs: Vec<f64>,
    pub old_values: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
    pub start_hidden: Vec<f64>,
    pub start_prev_action: Vec<Option<usize>>,
}

impl TransitionBatch {
    pub fn num_seqs(&self) -> usize {
        self.env_ids.len()
    }

    pub fn num_steps(&self) -> usize {
        self.env_ids.len() * self.seq_len
    }

    /// Copies the given environments' sequences out of a buffer. Advantages
    /// and returns are zero when the buffer has none yet.
    pub fn from_buffer(buffer: &RolloutBuffer, env_ids: &[usize]) -> Self {
        let t = buffer.length;
        let n = env_ids.len() * t;
        let mut b = TransitionBatch {
            env_ids: env_ids.to_vec(),
            seq_len: t,
            n_rays: buffer.n_rays,
            state_size: buffer.state_size,
            depth: Vec::with_capacity(n * buffer.n_rays),
            goal: Vec::with_capacity(n),
            actions: Vec::with_capacity(n),
            masks: Vec::with_capacity(n),
            old_log_probs: Vec::with_capacity(n),
            old_values: Vec::with_capacity(n),
            advantages: Vec::with_capacity(n),
            returns: Vec::with_capacity(n),
            start_hidden: Vec::with_capacity(env_ids.len() * buffer.state_size),
            start_prev_action: Vec::with_capacity(env_ids.len()),
        };
        for &e in env_ids {
            let span = e * t..(e + 1) * t;
            b.depth.extend_from_slice(&buffer.depth[span.start * buffer.n_rays..span.end * buffer.n_rays]);
            b.goal.extend_from_slice(&buffer.goal[span.clone()]);
            b.actions.extend_from_slice(&buffer.actions[span.clone()]);
            b.masks.extend_from_slice(&buffer.masks[span.clone()]);
            b.old_log_probs.extend_from_slice(&buffer.log_probs[span.clone()]);
            b.old_values.extend_from_slice(&buffer.values[span.clone()]);
            match (&buffer.advantages, &buffer.returns) {
                (Some(a), Some(r)) => {
                    b.advantages.extend_from_slice(&a[span.clone()]);
                    b.returns.extend_from_slice(&r[span.clone()]);
                }
                _ => {
                    b.advantages.extend(std::iter::repeat_n(0.0, t));
                    b.returns.extend(std::iter::repeat_n(0.0, t));
                }
            }
            b.start_hidden.extend_from_slice(
                &buffer.start_hidden[e * buffer.state_size..(e + 1) * buffer.state_size],
            );
            b.start_prev_action.push(buffer.start_prev_action[e]);
        }
        b
    }
}

/// Shuffles environments and partitions them into `num_minibatches` groups of
/// whole sequences.
pub fn minibatch_split<R: Rng + ?Sized>(
    buffer: &RolloutBuffer,
    num_minibatches: usize,
    rng: &mut R,
) -> Result<Vec<TransitionBatch>> {
    if num_minibatches == 0 || !buffer.num_envs.is_multiple_of(num_minibatches) {
        return Err(Error::Shape(format!(
            "{} environments cannot be split into {num_minibatches} minibatches",
            buffer.num_envs
        )));
    }
    let mut order: Vec<usize> = (0..buffer.num_envs).collect();
    order.shuffle(rng);
    let per = buffer.num_envs / num_minibatches;
    Ok(order.chunks(per).map(|ids| TransitionBatch::from_buffer(buffer, ids)).collect())
}
