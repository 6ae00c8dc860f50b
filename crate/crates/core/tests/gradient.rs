mod common;

use common::*;
use pointnav::policy::EncoderKind;

fn check(encoder: EncoderKind, rnn_layers: usize, seed: u64) {
    let mut policy = random_policy(tiny_config(encoder, rnn_layers), seed);
    let batch = random_batch(&mut policy, 2, 8, seed + 100);
    let analytic = analytic_grad(&policy, &batch, 0.2);
    let numeric = central_difference(&policy, &batch, 0.2, 1e-5);
    for (name, err) in relative_errors(&policy, &analytic, &numeric) {
        assert!(err < 1e-4, "{encoder:?} x{rnn_layers}: {name} relative error {err:e}");
    }
}

#[test]
fn mlp_single_layer() {
    check(EncoderKind::Mlp, 1, 1);
}

#[test]
fn mlp_two_layers() {
    check(EncoderKind::Mlp, 2, 2);
}

#[test]
fn simple_cnn_single_layer() {
    check(EncoderKind::SimpleCnn, 1, 3);
}

#[test]
fn simple_cnn_two_layers() {
    check(EncoderKind::SimpleCnn, 2, 4);
}

#[test]
fn residual_gn_single_layer() {
    check(EncoderKind::ResidualGn, 1, 5);
}

#[test]
fn residual_gn_two_layers() {
    check(EncoderKind::ResidualGn, 2, 6);
}

