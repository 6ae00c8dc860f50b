use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaeConfig {
    pub gamma: f64,
    pub tau: f64,
}

impl Default for GaeConfig {
    fn default() -> Self {
        Self { gamma: 0.99, tau: 0.95 }
    }
}

/// Backward GAE recursion per environment.
///
/// `continues[e][t]` is 0 when the episode ended on step `t` (the following
/// observation belongs to a new episode) and 1 otherwise; it gates both the
/// bootstrap value and the carried advantage. Values past the last step come
/// from `bootstrap[e]`.
///
/// Returns `(advantages, returns)` with `returns = advantages + values`.
#[allow(clippy::type_complexity)]
pub fn compute_gae(
    rewards: &[Vec<f64>],
    values: &[Vec<f64>],
    continues: &[Vec<f64>],
    bootstrap: &[f64],
    cfg: &GaeConfig,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let n = rewards.len();
    if values.len() != n || continues.len() != n || bootstrap.len() != n {
        return Err(Error::Shape(format!(
            "gae: {} reward rows, {} value rows, {} mask rows, {} bootstraps",
            n,
            values.len(),
            continues.len(),
            bootstrap.len()
        )));
    }
    let mut advantages = Vec::with_capacity(n);
    let mut returns = Vec::with_capacity(n);
    for e in 0..n {
        let (r, v, m) = (&rewards[e], &values[e], &continues[e]);
        let len = r.len();
        if v.len() != len || m.len() != len {
            return Err(Error::Shape(format!("gae: env {e} rows have unequal lengths")));
        }
        let mut adv = vec![0.0; len];
        let mut next_value = bootstrap[e];
        let mut next_adv = 0.0;
        for t in (0..len).rev() {
            let delta = r[t] + cfg.gamma * m[t] * next_value - v[t];
            next_adv = delta + cfg.gamma * cfg.tau * m[t] * next_adv;
            adv[t] = next_adv;
            next_value = v[t];
        }
        returns.push(adv.iter().zip(v).map(|(a, v)| a + v).collect());
        advantages.push(adv);
    }
    Ok((advantages, returns))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_terminal_step() {
        let (a, r) = compute_gae(&[vec![1.0]], &[vec![0.0]], &[vec![0.0]], &[5.0], &GaeConfig::default())
            .unwrap();
        assert_eq!(a, vec![vec![1.0]]);
        assert_eq!(r, vec![vec![1.0]]);
    }

    #[test]
    fn monte_carlo_limit() {
        let rewards = vec![vec![1.0, -0.5, 2.0, 0.25]];
        let values = vec![vec![0.3, 0.1, -0.2, 0.7]];
        let cfg = GaeConfig { gamma: 1.0, tau: 1.0 };
        let (a, _) = compute_gae(&rewards, &values, &[vec![1.0; 4]], &[1.5], &cfg).unwrap();
        for t in 0..4 {
            let expected: f64 = rewards[0][t..].iter().sum::<f64>() + 1.5 - values[0][t];
            assert!((a[0][t] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_masks_decouple_steps() {
        let rewards = vec![vec![1.0, 2.0, 3.0]];
        let values = vec![vec![0.5, 0.25, 4.0]];
        let (a, _) = compute_gae(&rewards, &values, &[vec![0.0; 3]], &[9.0], &GaeConfig::default())
            .unwrap();
        assert_eq!(a[0], vec![0.5, 1.75, -1.0]);
    }

    #[test]
    fn shape_mismatch() {
        let err = compute_gae(&[vec![1.0]], &[vec![0.0, 1.0]], &[vec![1.0]], &[0.0], &GaeConfig::default());
        assert!(matches!(err, Err(Error::Shape(_))));
        let err = compute_gae(&[vec![1.0]], &[vec![0.0]], &[vec![1.0]], &[], &GaeConfig::default());
        assert!(matches!(err, Err(Error::Shape(_))));
    }
}
