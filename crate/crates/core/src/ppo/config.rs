use serde::{Deserialize, Serialize};

use super::adam::AdamConfig;
use crate::advantage::{GaeConfig, NormalizationStrategy};
use crate::error::{Error, Result};

/// The two hyper-parameter sets compared throughout: Set 1 is the
/// conservative one (small clip, many minibatches), Set 2 the aggressive one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperSet {
    Set1,
    Set2,
}

impl HyperSet {
    pub fn name(self) -> &'static str {
        match self {
            HyperSet::Set1 => "set1",
            HyperSet::Set2 => "set2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PpoConfig {
    pub clip_eps0: f64,
    pub lr0: f64,
    pub ppo_epochs: usize,
    pub num_minibatches: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub max_grad_norm: f64,
    pub gae: GaeConfig,
    pub normalization: NormalizationStrategy,
    pub adam: AdamConfig,
}

impl PpoConfig {
    pub fn from_set(set: HyperSet) -> Self {
        let (clip_eps0, num_minibatches) = match set {
            HyperSet::Set1 => (0.1, 6),
            HyperSet::Set2 => (0.2, 2),
        };
        Self {
            clip_eps0,
            lr0: 2.5e-4,
            ppo_epochs: 4,
            num_minibatches,
            value_coef: 0.5,
            entropy_coef: 0.01,
            max_grad_norm: 0.5,
            gae: GaeConfig::default(),
            normalization: NormalizationStrategy::None,
            adam: AdamConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.clip_eps0 > 0.0) {
            return bad("clip_eps0 must be positive");
        }
        if !(self.lr0 >= 0.0) {
            return bad("lr0 must be non-negative");
        }
        if self.ppo_epochs == 0 || self.num_minibatches == 0 {
            return bad("ppo_epochs and num_minibatches must be positive");
        }
        if !(self.max_grad_norm > 0.0) {
            return bad("max_grad_norm must be positive");
        }
        if !(0.0..=1.0).contains(&self.gae.gamma) || !(0.0..=1.0).contains(&self.gae.tau) {
            return bad("gamma and tau must lie in [0, 1]");
        }
        if let NormalizationStrategy::ClippedEma { decay, eps } = self.normalization {
            if !(0.0..1.0).contains(&decay) || !(eps >= 0.0) {
                return bad("clipped_ema needs decay in [0, 1) and eps >= 0");
            }
        }
        Ok(())
    }
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self::from_set(HyperSet::Set2)
    }
}
