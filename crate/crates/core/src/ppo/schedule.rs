/// Linear decay to a third of the initial value over `progress ∈ [0, 1]`.
/// Out-of-range progress is clamped.
pub fn decay(x0: f64, progress: f64) -> f64 {
    let p = if progress.is_nan() { 0.0 } else { progress.clamp(0.0, 1.0) };
    if p == 0.0 {
        x0
    } else {
        // Written as (3 - 2p) / 3 so that p = 1 and p = 0.5 land exactly on
        // x0 / 3 and 2 x0 / 3.
        x0 * (3.0 - 2.0 * p) / 3.0
    }
}

/// `(lr, clip)` at the given training progress.
pub fn schedule(progress: f64, lr0: f64, clip0: f64) -> (f64, f64) {
    (decay(lr0, progress), decay(clip0, progress))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedules {
    pub lr0: f64,
    pub clip0: f64,
}

impl Schedules {
    pub fn lr(&self, progress: f64) -> f64 {
        decay(self.lr0, progress)
    }

    pub fn clip(&self, progress: f64) -> f64 {
        decay(self.clip0, progress)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn endpoints() {
        assert_eq!(schedule(0.0, 2.5e-4, 0.2), (2.5e-4, 0.2));
        assert_eq!(schedule(1.0, 2.5e-4, 0.1), (2.5e-4 / 3.0, 0.1 / 3.0));
        assert_eq!(schedule(0.5, 2.5e-4, 0.2).0, 2.0 / 3.0 * 2.5e-4);
        assert_eq!(schedule(-1.0, 1.0, 1.0), (1.0, 1.0));
        assert_eq!(schedule(7.0, 3.0, 3.0), (1.0, 1.0));
    }

    proptest! {
        #[test]
        fn monotone_and_bounded(a in 0.0f64..1.0, b in 0.0f64..1.0, x0 in 1e-6f64..10.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(decay(x0, lo) >= decay(x0, hi));
            prop_assert!(decay(x0, hi) >= x0 / 3.0 - 1e-15);
            let linear = x0 * (1.0 - 2.0 / 3.0 * a);
            prop_assert!((decay(x0, a) - linear).abs() <= 1e-12 * x0);
        }
    }
}
