#![allow(dead_code)]

pub mod oracle;

use pointnav::policy::{EncoderKind, Network, Policy, PolicyConfig, PolicyParams, RunningObsStats};
use pointnav::ppo::ppo_loss;
use pointnav::rollout::TransitionBatch;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const N_RAYS: usize = 32;

pub fn tiny_config(encoder: EncoderKind, rnn_layers: usize) -> PolicyConfig {
    PolicyConfig { encoder, hidden_size: 8, rnn_layers, goal_embed_dim: 4, action_embed_dim: 3 }
}

/// Random policy with perturbed biases and group-norm affines so no parameter
/// sits at its structured initial value.
pub fn random_policy(config: PolicyConfig, seed: u64) -> Policy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = Network::new(config, N_RAYS).unwrap();
    let mut values = net.init_params(&mut rng);
    for v in values.iter_mut() {
        *v += rng.gen_range(-0.1..0.1);
    }
    Policy::from_parts(net, PolicyParams { values, obs_stats: RunningObsStats::new(N_RAYS) })
}

/// A batch of `envs x len` random transitions whose stored log-probs and
/// values are the policy's own outputs perturbed by noise, so some ratios land
/// outside the clip range.
pub fn random_batch(policy: &mut Policy, envs: usize, len: usize, seed: u64) -> TransitionBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = envs * len;
    let ss = policy.state_size();
    let mut batch = TransitionBatch {
        env_ids: (0..envs).collect(),
        seq_len: len,
        n_rays: N_RAYS,
        state_size: ss,
        depth: (0..n * N_RAYS).map(|_| rng.gen_range(-2.0..2.0)).collect(),
        goal: (0..n)
            .map(|_| (rng.gen_range(0.0..4.0), rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)))
            .collect(),
        actions: (0..n).map(|_| rng.gen_range(0..4)).collect(),
        masks: (0..n).map(|i| if i % len == 0 || rng.gen_bool(0.2) { 0.0 } else { 1.0 }).collect(),
        old_log_probs: vec![0.0; n],
        old_values: vec![0.0; n],
        advantages: (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect(),
        returns: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        start_hidden: (0..envs * ss).map(|_| rng.gen_range(-0.8..0.8)).collect(),
        start_prev_action: (0..envs).map(|e| if e % 2 == 0 { None } else { Some(rng.gen_range(0..4)) }).collect(),
    };
    // Masks at t = 0 are random too so the stored start state matters.
    for e in 0..envs {
        batch.masks[e * len] = if rng.gen_bool(0.5) { 1.0 } else { 0.0 };
    }
    let eval = policy.evaluate_sequences(&batch).unwrap();
    for i in 0..n {
        batch.old_log_probs[i] = eval.log_probs[i] + rng.gen_range(-0.3..0.3);
        batch.old_values[i] = eval.values[i] + rng.gen_range(-0.4..0.4);
    }
    batch
}

pub fn loss_at(policy: &Policy, p: &[f64], batch: &TransitionBatch, clip: f64) -> f64 {
    let mut ws = policy.net.workspace();
    ppo_loss(&policy.net, p, batch, &batch.advantages, clip, 0.5, 0.01, &mut ws, None).unwrap().loss
}

pub fn analytic_grad(policy: &Policy, batch: &TransitionBatch, clip: f64) -> Vec<f64> {
    let mut ws = policy.net.workspace();
    let mut g = vec![0.0; policy.net.num_params()];
    ppo_loss(&policy.net, &policy.params.values, batch, &batch.advantages, clip, 0.5, 0.01, &mut ws, Some(&mut g))
        .unwrap();
    g
}

pub fn central_difference(policy: &Policy, batch: &TransitionBatch, clip: f64, h: f64) -> Vec<f64> {
    let mut p = policy.params.values.clone();
    (0..p.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + h;
            let up = loss_at(policy, &p, batch, clip);
            p[i] = orig - h;
            let down = loss_at(policy, &p, batch, clip);
            p[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Worst element-wise relative error per tensor, with a floor on the
/// denominator for entries whose true gradient is essentially zero.
pub fn relative_errors(policy: &Policy, analytic: &[f64], numeric: &[f64]) -> Vec<(String, f64)> {
    policy
        .net
        .layout()
        .tensors()
        .iter()
        .map(|t| {
            let worst = t
                .range()
                .map(|i| {
                    let denom = analytic[i].abs().max(numeric[i].abs()).max(1e-6);
                    (analytic[i] - numeric[i]).abs() / denom
                })
                .fold(0.0, f64::max);
            (t.name.clone(), worst)
        })
        .collect()
}

/// Mean and unbiased sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}
