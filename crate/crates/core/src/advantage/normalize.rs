use serde::{Deserialize, Serialize};

/// Floor on the per-minibatch standard deviation.
pub const PER_MINIBATCH_EPS: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum NormalizationStrategy {
    None,
    PerMiniBatch,
    /// Exponential moving averages of the batch mean and variance, with the
    /// standard deviation clipped from below at 1.
    ClippedEma { decay: f64, eps: f64 },
}

impl NormalizationStrategy {
    pub fn clipped_ema() -> Self {
        NormalizationStrategy::ClippedEma { decay: 0.99, eps: 1e-8 }
    }
}

/// Debiased exponential moving averages of advantage mean and variance.
///
/// The raw accumulators start at zero and are divided by `1 - decay^n`, so the
/// first update reproduces the first batch's statistics exactly.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunningMoments {
    pub raw_mean: f64,
    pub raw_var: f64,
    pub updates: u64,
    pub decay: f64,
}

impl RunningMoments {
    pub fn new(decay: f64) -> Self {
        Self { raw_mean: 0.0, raw_var: 0.0, updates: 0, decay }
    }

    pub fn initialized(&self) -> bool {
        self.updates > 0
    }

    fn correction(&self) -> f64 {
        1.0 - self.decay.powi(self.updates.min(i32::MAX as u64) as i32)
    }

    pub fn mean(&self) -> f64 {
        if self.updates == 0 {
            0.0
        } else {
            self.raw_mean / self.correction()
        }
    }

    pub fn var(&self) -> f64 {
        if self.updates == 0 {
            0.0
        } else {
            (self.raw_var / self.correction()).max(0.0)
        }
    }

    pub fn update(&mut self, batch_mean: f64, batch_var: f64) {
        self.raw_mean = self.decay * self.raw_mean + (1.0 - self.decay) * batch_mean;
        self.raw_var = self.decay * self.raw_var + (1.0 - self.decay) * batch_var;
        self.updates += 1;
    }
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Normalizes a minibatch of advantages in place and returns the divisor that
/// was applied (1 for `None`).
pub fn normalize(
    advantages: &mut [f64],
    strategy: &NormalizationStrategy,
    moments: &mut RunningMoments,
) -> f64 {
    if advantages.is_empty() {
        return 1.0;
    }
    match *strategy {
        NormalizationStrategy::None => 1.0,
        NormalizationStrategy::PerMiniBatch => {
            let (mean, var) = mean_var(advantages);
            let denom = var.sqrt().max(PER_MINIBATCH_EPS);
            for a in advantages.iter_mut() {
                *a = (*a - mean) / denom;
            }
            denom
        }
        NormalizationStrategy::ClippedEma { decay, eps } => {
            let (mean, var) = mean_var(advantages);
            moments.decay = decay;
            moments.update(mean, var);
            let mu = moments.mean();
            let sigma = (moments.var() + eps).sqrt().max(1.0);
            for a in advantages.iter_mut() {
                *a = (*a - mu) / sigma;
            }
            sigma
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn per_minibatch_examples() {
        let mut m = RunningMoments::new(0.99);
        let mut a = vec![-1.0, 1.0];
        normalize(&mut a, &NormalizationStrategy::PerMiniBatch, &mut m);
        assert_eq!(a, vec![-1.0, 1.0]);
        let mut c = vec![3.0; 5];
        normalize(&mut c, &NormalizationStrategy::PerMiniBatch, &mut m);
        assert!(c.iter().all(|&x| x == 0.0));
        assert!(!m.initialized());
    }

    #[test]
    fn none_is_identity() {
        let mut m = RunningMoments::new(0.99);
        let mut a = vec![0.5, -2.0, 7.0];
        let before = a.clone();
        assert_eq!(normalize(&mut a, &NormalizationStrategy::None, &mut m), 1.0);
        assert_eq!(a, before);
        assert_eq!(m, RunningMoments::new(0.99));
    }

    #[test]
    fn clipped_ema_small_sigma_only_shifts() {
        let mut m = RunningMoments::new(0.99);
        // Batch std 0.2.
        let mut a = vec![0.8, 1.2];
        let div = normalize(&mut a, &NormalizationStrategy::clipped_ema(), &mut m);
        assert_eq!(div, 1.0);
        assert!((a[0] + 0.2).abs() < 1e-12 && (a[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn clipped_ema_first_update_uses_batch_statistics() {
        let mut m = RunningMoments::new(0.9);
        m.update(2.0, 9.0);
        assert!((m.mean() - 2.0).abs() < 1e-15);
        assert!((m.var() - 9.0).abs() < 1e-14);
    }

    #[test]
    fn ema_converges_to_stream_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut m = RunningMoments::new(0.99);
        let strategy = NormalizationStrategy::ClippedEma { decay: 0.99, eps: 1e-8 };
        for _ in 0..2000 {
            let mut batch: Vec<f64> = (0..64).map(|_| 4.0 + 3.0 * (rng.gen::<f64>() - 0.5)).collect();
            normalize(&mut batch, &strategy, &mut m);
        }
        assert!((m.mean() - 4.0).abs() < 0.05, "mean {}", m.mean());
        assert!((m.var() - 0.75).abs() < 0.05, "var {}", m.var());
    }

    proptest! {
        #[test]
        fn per_minibatch_moments(xs in prop::collection::vec(-100.0f64..100.0, 2..200)) {
            let (_, var) = mean_var(&xs);
            prop_assume!(var > 1e-3);
            let mut a = xs.clone();
            normalize(&mut a, &NormalizationStrategy::PerMiniBatch, &mut RunningMoments::new(0.99));
            let (m, v) = mean_var(&a);
            prop_assert!(m.abs() < 1e-9);
            prop_assert!((v - 1.0).abs() < 1e-6);
        }

        #[test]
        fn all_strategies_preserve_order(xs in prop::collection::vec(-50.0f64..50.0, 1..100)) {
            for s in [NormalizationStrategy::None, NormalizationStrategy::PerMiniBatch, NormalizationStrategy::clipped_ema()] {
                let mut a = xs.clone();
                normalize(&mut a, &s, &mut RunningMoments::new(0.99));
                for i in 0..xs.len() {
                    for j in 0..xs.len() {
                        if xs[i] < xs[j] {
                            prop_assert!(a[i] <= a[j]);
                        }
                    }
                }
            }
        }
    }
}
