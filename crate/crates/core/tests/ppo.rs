mod common;

use std::sync::Arc;

use common::{random_batch, random_policy, tiny_config};
use pointnav::error::Error;
use pointnav::navsim::{AutoResetEnv, EpisodeSource, GridMap, NavConfig};
use pointnav::policy::{EncoderKind, Policy};
use pointnav::ppo::{clip_grad_norm, ppo_loss, HyperSet, Learner, PpoConfig};
use pointnav::rollout::{Collector, Latency, RolloutBuffer, SamplerMode};

fn rollout(policy: &mut Policy, num_envs: usize, len: usize, seed: u64) -> RolloutBuffer {
    let maps: Arc<Vec<_>> = Arc::new((0..3).map(|s| Arc::new(GridMap::generate(s, 10, 10, 0.1).unwrap())).collect());
    let envs = (0..num_envs)
        .map(|e| AutoResetEnv::new(NavConfig::default(), EpisodeSource::new(maps.clone(), seed + e as u64, 0.5, 40)).unwrap())
        .collect();
    let mut c = Collector::new(envs, policy.state_size(), seed, Latency::default()).unwrap();
    c.collect(policy, len, SamplerMode::Sequential).unwrap()
}

fn loss_parts(policy: &Policy, batch: &pointnav::rollout::TransitionBatch, adv: &[f64], clip: f64) -> pointnav::ppo::LossOutput {
    let mut ws = policy.net.workspace();
    ppo_loss(&policy.net, &policy.params.values, batch, adv, clip, 0.5, 0.01, &mut ws, None).unwrap()
}

#[test]
fn identity_ratio() {
    let mut policy = random_policy(tiny_config(EncoderKind::Mlp, 1), 1);
    let mut batch = random_batch(&mut policy, 3, 7, 2);
    batch.old_log_probs = policy.evaluate_sequences(&batch).unwrap().log_probs;
    let out = loss_parts(&policy, &batch, &batch.advantages, 0.2);
    let mean_adv = batch.advantages.iter().sum::<f64>() / batch.num_steps() as f64;
    assert_eq!(out.breakdown.clip_fraction, 0.0);
    assert!((out.breakdown.policy_loss + mean_adv).abs() < 1e-12);
}

#[test]
fn zero_advantages_give_zero_policy_term() {
    let mut policy = random_policy(tiny_config(EncoderKind::SimpleCnn, 1), 3);
    let batch = random_batch(&mut policy, 2, 5, 4);
    let out = loss_parts(&policy, &batch, &vec![0.0; batch.num_steps()], 0.2);
    assert_eq!(out.breakdown.policy_loss, 0.0);
    assert!(out.breakdown.entropy > 0.0 && out.breakdown.entropy <= 4f64.ln());
    assert!((0.0..=1.0).contains(&out.breakdown.clip_fraction));
}

/// With an unbounded clip range the surrogate gradient is the plain
/// importance-weighted policy gradient; check it against finite differences of
/// `-mean(ratio * A)` computed only through sequence evaluation.
#[test]
fn unclipped_surrogate_is_vanilla_policy_gradient() {
    for kind in EncoderKind::ALL {
        let mut policy = random_policy(tiny_config(kind, 1), 5);
        let batch = random_batch(&mut policy, 2, 6, 6);
        let n = batch.num_steps() as f64;
        let mut ws = policy.net.workspace();
        let mut grad = vec![0.0; policy.net.num_params()];
        ppo_loss(&policy.net, &policy.params.values, &batch, &batch.advantages, f64::INFINITY, 0.0, 0.0, &mut ws, Some(&mut grad))
            .unwrap();
        let surrogate = |p: &[f64]| -> f64 {
            let mut probe = policy.clone();
            probe.params.values.copy_from_slice(p);
            let eval = probe.evaluate_sequences(&batch).unwrap();
            -eval
                .log_probs
                .iter()
                .zip(&batch.old_log_probs)
                .zip(&batch.advantages)
                .map(|((lp, old), a)| (lp - old).exp() * a)
                .sum::<f64>()
                / n
        };
        let mut p = policy.params.values.clone();
        let h = 1e-6;
        for i in 0..p.len() {
            let x = p[i];
            p[i] = x + h;
            let up = surrogate(&p);
            p[i] = x - h;
            let down = surrogate(&p);
            p[i] = x;
            let fd = (up - down) / (2.0 * h);
            assert!((grad[i] - fd).abs() <= 1e-6 * fd.abs().max(1e-3), "{kind:?} param {i}: {} vs {fd}", grad[i]);
        }
    }
}

#[test]
fn gradient_clipping_hits_target() {
    let mut policy = random_policy(tiny_config(EncoderKind::Mlp, 2), 7);
    let batch = random_batch(&mut policy, 2, 8, 8);
    let mut grad = common::analytic_grad(&policy, &batch, 0.2);
    let scaled: Vec<f64> = grad.iter().map(|g| g * 100.0).collect();
    grad.copy_from_slice(&scaled);
    let pre = clip_grad_norm(&mut grad, 0.5);
    assert!(pre > 0.5);
    let post = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    assert!((post - 0.5).abs() < 1e-9);
}

fn small_policy(seed: u64) -> Policy {
    random_policy(tiny_config(EncoderKind::Mlp, 1), seed)
}

#[test]
fn set2_takes_eight_steps_per_update() {
    let mut policy = small_policy(9);
    let mut buffer = rollout(&mut policy, 6, 16, 10);
    let mut learner = Learner::new(PpoConfig::from_set(HyperSet::Set2), policy.net.num_params(), 0).unwrap();
    let report = learner.update(&mut policy, &mut buffer, 0.0).unwrap();
    assert_eq!(report.minibatches.len(), 8);
    assert_eq!(learner.adam.t, 8);
    assert_eq!(report.minibatches[0].clip_fraction, 0.0);
    let mut learner = Learner::new(PpoConfig::from_set(HyperSet::Set1), policy.net.num_params(), 0).unwrap();
    assert_eq!(learner.update(&mut policy, &mut buffer, 0.0).unwrap().minibatches.len(), 24);
}

#[test]
fn first_minibatch_is_unclipped_with_per_minibatch_normalization() {
    let mut policy = small_policy(11);
    let mut buffer = rollout(&mut policy, 4, 12, 12);
    let mut cfg = PpoConfig::from_set(HyperSet::Set2);
    cfg.normalization = pointnav::advantage::NormalizationStrategy::PerMiniBatch;
    let mut learner = Learner::new(cfg, policy.net.num_params(), 1).unwrap();
    let report = learner.update(&mut policy, &mut buffer, 0.3).unwrap();
    assert_eq!(report.minibatches[0].clip_fraction, 0.0);
    assert_eq!(report.lr, 2.5e-4 * (3.0 - 0.6) / 3.0);
}

#[test]
fn zero_learning_rate_keeps_params() {
    let mut policy = small_policy(13);
    let mut buffer = rollout(&mut policy, 2, 10, 14);
    let before = policy.params.values.clone();
    let mut cfg = PpoConfig::from_set(HyperSet::Set2);
    cfg.lr0 = 0.0;
    let mut learner = Learner::new(cfg, policy.net.num_params(), 2).unwrap();
    learner.update(&mut policy, &mut buffer, 0.0).unwrap();
    assert_eq!(policy.params.values, before);
}

#[test]
fn updates_are_deterministic() {
    let run = || {
        let mut policy = small_policy(15);
        let mut buffer = rollout(&mut policy, 6, 8, 16);
        let mut learner = Learner::new(PpoConfig::from_set(HyperSet::Set1), policy.net.num_params(), 3).unwrap();
        let report = learner.update(&mut policy, &mut buffer, 0.5).unwrap();
        (policy.params.values, report)
    };
    let (a, ra) = run();
    let (b, rb) = run();
    assert_eq!(a, b);
    assert_eq!(ra, rb);
}

#[test]
fn non_finite_parameters_surface_as_divergence() {
    let mut policy = small_policy(17);
    let mut buffer = rollout(&mut policy, 2, 6, 18);
    let range = policy.net.layout().get("critic.weight").unwrap().range();
    policy.params.values[range.start] = f64::NAN;
    let mut learner = Learner::new(PpoConfig::from_set(HyperSet::Set2), policy.net.num_params(), 4).unwrap();
    assert!(matches!(learner.update(&mut policy, &mut buffer, 0.0), Err(Error::Divergence(_))));
}
