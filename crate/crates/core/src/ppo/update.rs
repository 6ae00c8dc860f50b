use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::Adam;
use super::config::PpoConfig;
use super::loss::{ppo_loss, LossBreakdown};
use super::schedule::schedule;
use crate::advantage::{normalize, RunningMoments};
use crate::error::{Error, Result};
use crate::policy::kernels::sq_norm;
use crate::policy::Policy;
use crate::rollout::{minibatch_split, RolloutBuffer};

/// Rescales `grad` in place so its global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = sq_norm(grad).sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for g in grad.iter_mut() {
            *g *= scale;
        }
    }
    norm
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateReport {
    pub lr: f64,
    pub clip: f64,
    pub minibatches: Vec<LossBreakdown>,
}

impl UpdateReport {
    /// Average of the per-minibatch diagnostics.
    pub fn mean(&self) -> LossBreakdown {
        let n = self.minibatches.len().max(1) as f64;
        let mut m = LossBreakdown::default();
        for b in &self.minibatches {
            m.policy_loss += b.policy_loss / n;
            m.value_loss += b.value_loss / n;
            m.entropy += b.entropy / n;
            m.grad_norm_pre_clip += b.grad_norm_pre_clip / n;
            m.clip_fraction += b.clip_fraction / n;
        }
        m
    }
}

/// Optimizer-side state owned across updates.
#[derive(Debug, Clone, PartialEq)]
pub struct Learner {
    pub config: PpoConfig,
    pub adam: Adam,
    pub moments: RunningMoments,
    pub rng: ChaCha8Rng,
}

impl Learner {
    pub fn new(config: PpoConfig, num_params: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        let decay = match config.normalization {
            crate::advantage::NormalizationStrategy::ClippedEma { decay, .. } => decay,
            _ => 0.99,
        };
        Ok(Self {
            config,
            adam: Adam::new(config.adam, num_params),
            moments: RunningMoments::new(decay),
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    /// One PPO update: GAE once, then `ppo_epochs` passes over freshly
    /// shuffled environment-wise minibatches.
    pub fn update(&mut self, policy: &mut Policy, buffer: &mut RolloutBuffer, progress: f64) -> Result<UpdateReport> {
        let cfg = self.config;
        let (lr, clip) = schedule(progress, cfg.lr0, cfg.clip_eps0);
        buffer.compute_advantages(&cfg.gae)?;
        let mut report = UpdateReport { lr, clip, minibatches: Vec::new() };
        let mut grad = vec![0.0; policy.net.num_params()];
        for _ in 0..cfg.ppo_epochs {
            for batch in minibatch_split(buffer, cfg.num_minibatches, &mut self.rng)? {
                let mut adv = batch.advantages.clone();
                normalize(&mut adv, &cfg.normalization, &mut self.moments);
                grad.fill(0.0);
                let (net, params, ws) = policy.parts_mut();
                let out = ppo_loss(
                    net,
                    &params.values,
                    &batch,
                    &adv,
                    clip,
                    cfg.value_coef,
                    cfg.entropy_coef,
                    ws,
                    Some(&mut grad),
                )?;
                let norm = clip_grad_norm(&mut grad, cfg.max_grad_norm);
                if !norm.is_finite() {
                    return Err(Error::Divergence(format!("non-finite gradient norm {norm}")));
                }
                self.adam.step(&mut params.values, &grad, lr);
                if params.values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Divergence("non-finite parameters after step".into()));
                }
                let mut b = out.breakdown;
                b.grad_norm_pre_clip = norm;
                report.minibatches.push(b);
            }
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clipping_hits_the_target_norm() {
        let mut g = vec![3.0, 4.0, 12.0];
        let pre = clip_grad_norm(&mut g, 0.5);
        assert_eq!(pre, 13.0);
        assert!((sq_norm(&g).sqrt() - 0.5).abs() < 1e-12);
        let mut small = vec![0.1, 0.2];
        clip_grad_norm(&mut small, 0.5);
        assert_eq!(small, vec![0.1, 0.2]);
    }
}
