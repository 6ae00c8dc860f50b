use super::env::EpisodeOutcome;
use crate::error::{Error, Result};

/// Success weighted by normalized inverse path length, averaged over episodes.
pub fn compute_spl(outcomes: &[EpisodeOutcome]) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::EmptyOutcomes);
    }
    let total: f64 = outcomes
        .iter()
        .map(|o| {
            if o.success {
                let denom = o.path_length.max(o.shortest_path_length);
                if denom > 0.0 {
                    o.shortest_path_length / denom
                } else {
                    1.0
                }
            } else {
                0.0
            }
        })
        .sum();
    Ok(total / outcomes.len() as f64)
}

pub fn success_rate(outcomes: &[EpisodeOutcome]) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::EmptyOutcomes);
    }
    Ok(outcomes.iter().filter(|o| o.success).count() as f64 / outcomes.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn outcome(success: bool, p: f64, l: f64) -> EpisodeOutcome {
        EpisodeOutcome { success, path_length: p, shortest_path_length: l, steps: 10 }
    }

    #[test]
    fn spl_examples() {
        assert_eq!(compute_spl(&[outcome(true, 2.0, 2.0)]).unwrap(), 1.0);
        assert_eq!(compute_spl(&[outcome(false, 2.0, 2.0)]).unwrap(), 0.0);
        assert_eq!(compute_spl(&[outcome(true, 4.0, 2.0)]).unwrap(), 0.5);
        assert_eq!(compute_spl(&[outcome(true, 1.0, 2.0)]).unwrap(), 1.0);
        assert!(matches!(compute_spl(&[]), Err(Error::EmptyOutcomes)));
    }

    proptest! {
        #[test]
        fn spl_never_exceeds_success_rate(
            items in prop::collection::vec((any::<bool>(), 0.0f64..20.0, 0.01f64..20.0), 1..50)
        ) {
            let outcomes: Vec<_> = items.iter().map(|&(s, p, l)| outcome(s, p, l)).collect();
            let spl = compute_spl(&outcomes).unwrap();
            let sr = success_rate(&outcomes).unwrap();
            prop_assert!(spl >= 0.0);
            prop_assert!(spl <= sr + 1e-12);
        }
    }
}
