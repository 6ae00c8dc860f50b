/// Streaming per-channel mean and variance of observations (Welford).
#[derive(Debug, Clone, PartialEq)]
pub struct RunningObsStats {
    pub mean: Vec<f64>,
    /// Sum of squared deviations from the running mean.
    pub m2: Vec<f64>,
    pub count: u64,
}

pub const OBS_NORM_EPS: f64 = 1e-8;

impl RunningObsStats {
    pub fn new(channels: usize) -> Self {
        Self { mean: vec![0.0; channels], m2: vec![0.0; channels], count: 0 }
    }

    pub fn channels(&self) -> usize {
        self.mean.len()
    }

    /// Population variance per channel.
    pub fn var(&self) -> Vec<f64> {
        if self.count == 0 {
            return vec![0.0; self.channels()];
        }
        self.m2.iter().map(|m| m / self.count as f64).collect()
    }

    pub fn update(&mut self, obs: &[f64]) {
        debug_assert_eq!(obs.len(), self.channels());
        self.count += 1;
        let n = self.count as f64;
        for ((mean, m2), &x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(obs) {
            let delta = x - *mean;
            *mean += delta / n;
            *m2 += delta * (x - *mean);
        }
    }

    /// Writes the normalized observation into `out`; identity before the
    /// first update.
    pub fn normalize_into(&self, obs: &[f64], out: &mut [f64]) {
        if self.count == 0 {
            out.copy_from_slice(obs);
            return;
        }
        let n = self.count as f64;
        for i in 0..obs.len() {
            let var = self.m2[i] / n;
            out[i] = (obs[i] - self.mean[i]) / (var + OBS_NORM_EPS).sqrt();
        }
    }
}

/// Optionally folds `obs` into the statistics, then normalizes it.
pub fn normalize_obs(obs: &[f64], stats: &mut RunningObsStats, update: bool) -> Vec<f64> {
    if update {
        stats.update(obs);
    }
    let mut out = vec![0.0; obs.len()];
    stats.normalize_into(obs, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_before_updates() {
        let mut s = RunningObsStats::new(3);
        let x = [1.0, -2.0, 3.5];
        assert_eq!(normalize_obs(&x, &mut s, false), x.to_vec());
    }

    #[test]
    fn constant_stream_normalizes_to_zero() {
        let mut s = RunningObsStats::new(2);
        for _ in 0..5 {
            let out = normalize_obs(&[4.25, -1.5], &mut s, true);
            assert_eq!(out, vec![0.0, 0.0]);
        }
    }

    #[test]
    fn matches_two_pass_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<Vec<f64>> =
            (0..500).map(|_| (0..4).map(|c| c as f64 + rng.gen::<f64>() * 10.0).collect()).collect();
        let mut s = RunningObsStats::new(4);
        for row in &data {
            s.update(row);
        }
        let var = s.var();
        for c in 0..4 {
            let mean = data.iter().map(|r| r[c]).sum::<f64>() / data.len() as f64;
            let v = data.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / data.len() as f64;
            assert!((s.mean[c] - mean).abs() < 1e-9);
            assert!((var[c] - v).abs() < 1e-9);
        }
    }
}
