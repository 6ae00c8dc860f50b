use crate::error::{Error, Result};
use crate::policy::{Network, Workspace};
use crate::rollout::TransitionBatch;

/// Per-minibatch diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub grad_norm_pre_clip: f64,
    pub clip_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub loss: f64,
    pub breakdown: LossBreakdown,
}

/// Clipped PPO objective on one minibatch:
/// `policy + value_coef * value - entropy_coef * entropy`.
///
/// `advantages` are the (already normalized) advantages aligned with the
/// batch steps. When `grad` is given, the gradient of the total loss with
/// respect to `p` is added to it. `grad_norm_pre_clip` is left at 0.
#[allow(clippy::too_many_arguments)]
pub fn ppo_loss(
    net: &Network,
    p: &[f64],
    batch: &TransitionBatch,
    advantages: &[f64],
    clip: f64,
    value_coef: f64,
    entropy_coef: f64,
    ws: &mut Workspace,
    grad: Option<&mut [f64]>,
) -> Result<LossOutput> {
    let n = batch.num_steps();
    if advantages.len() != n || batch.returns.len() != n || batch.old_values.len() != n {
        return Err(Error::Shape("advantages/returns do not match the batch".into()));
    }
    if n == 0 {
        return Err(Error::Shape("empty minibatch".into()));
    }
    let fwd = net.forward_batch(p, batch, ws)?;
    let inv_n = 1.0 / n as f64;

    let mut d_log_prob = vec![0.0; n];
    let mut d_value = vec![0.0; n];
    let mut policy_loss = 0.0;
    let mut value_loss = 0.0;
    let mut clipped = 0usize;
    for i in 0..n {
        let a = advantages[i];
        let ratio = (fwd.eval.log_probs[i] - batch.old_log_probs[i]).exp();
        let surr1 = ratio * a;
        let surr2 = ratio.clamp(1.0 - clip, 1.0 + clip) * a;
        if (ratio - 1.0).abs() > clip {
            clipped += 1;
        }
        if surr1 <= surr2 {
            policy_loss -= surr1;
            d_log_prob[i] = -surr1 * inv_n;
        } else {
            // The clamped branch is active only outside the clip range, where
            // its gradient vanishes.
            policy_loss -= surr2;
        }

        let v = fwd.eval.values[i];
        let v_old = batch.old_values[i];
        let ret = batch.returns[i];
        let delta = v - v_old;
        let v_clipped = v_old + delta.clamp(-clip, clip);
        let e1 = v - ret;
        let e2 = v_clipped - ret;
        if e1 * e1 >= e2 * e2 {
            value_loss += e1 * e1;
            d_value[i] = value_coef * e1 * inv_n;
        } else {
            value_loss += e2 * e2;
            if delta.abs() < clip {
                d_value[i] = value_coef * e2 * inv_n;
            }
        }
    }
    policy_loss *= inv_n;
    value_loss *= 0.5 * inv_n;
    let entropy = fwd.eval.entropy;
    let loss = policy_loss + value_coef * value_loss - entropy_coef * entropy;
    if !loss.is_finite() {
        return Err(Error::Divergence(format!("non-finite loss {loss}")));
    }
    if let Some(g) = grad {
        let d_entropy = vec![-entropy_coef * inv_n; n];
        net.backward_batch(p, batch, &fwd, &d_log_prob, &d_value, &d_entropy, g, ws);
    }
    Ok(LossOutput {
        loss,
        breakdown: LossBreakdown {
            policy_loss,
            value_loss,
            entropy,
            grad_norm_pre_clip: 0.0,
            clip_fraction: clipped as f64 * inv_n,
        },
    })
}
