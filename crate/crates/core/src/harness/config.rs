use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::advantage::NormalizationStrategy;
use crate::error::{Error, Result};
use crate::navsim::{NavConfig, SensorConfig};
use crate::policy::{EncoderKind, PolicyConfig};
use crate::ppo::{HyperSet, PpoConfig};
use crate::rollout::{Latency, SamplerMode};

/// Training stops once either the sample count or the elapsed wall time
/// reaches its target. Exactly one must be set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BudgetSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_seconds: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Samples(u64),
    WallSeconds(f64),
}

impl BudgetSpec {
    pub fn samples(n: u64) -> Self {
        Self { samples: Some(n), wall_seconds: None }
    }

    pub fn wall_seconds(s: f64) -> Self {
        Self { samples: None, wall_seconds: Some(s) }
    }

    pub fn resolve(&self) -> Result<Budget> {
        match (self.samples, self.wall_seconds) {
            (Some(n), None) => Ok(Budget::Samples(n)),
            (None, Some(s)) if s >= 0.0 && s.is_finite() => Ok(Budget::WallSeconds(s)),
            (None, Some(s)) => Err(Error::Config(format!("wall_seconds must be finite and >= 0, got {s}"))),
            _ => Err(Error::Config("budget needs exactly one of samples or wall_seconds".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdvantageNorm {
    None,
    PerMinibatch,
    ClippedEma,
}

impl AdvantageNorm {
    pub const ALL: [AdvantageNorm; 3] = [AdvantageNorm::None, AdvantageNorm::PerMinibatch, AdvantageNorm::ClippedEma];

    pub fn name(self) -> &'static str {
        match self {
            AdvantageNorm::None => "none",
            AdvantageNorm::PerMinibatch => "per_minibatch",
            AdvantageNorm::ClippedEma => "clipped_ema",
        }
    }

    pub fn strategy(self) -> NormalizationStrategy {
        match self {
            AdvantageNorm::None => NormalizationStrategy::None,
            AdvantageNorm::PerMinibatch => NormalizationStrategy::PerMiniBatch,
            AdvantageNorm::ClippedEma => NormalizationStrategy::clipped_ema(),
        }
    }
}

/// Optional per-field replacements for the chosen hyper-parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct PpoOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip_eps0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ppo_epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_minibatches: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_coef: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy_coef: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_grad_norm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

/// Procedural map split. Training maps use seeds `seed .. seed + train`,
/// evaluation maps the next `eval` seeds, so the two never overlap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapSpec {
    pub width: usize,
    pub height: usize,
    pub obstacle_density: f64,
    pub train: usize,
    pub eval: usize,
    pub seed: u64,
    pub min_geodesic: f64,
    pub max_steps: usize,
}

impl Default for MapSpec {
    fn default() -> Self {
        Self {
            width: 16,
            height: 16,
            obstacle_density: 0.1,
            train: 72,
            eval: 14,
            seed: 0,
            min_geodesic: 1.0,
            max_steps: 500,
        }
    }
}

impl MapSpec {
    pub fn train_seeds(&self) -> std::ops::Range<u64> {
        self.seed..self.seed + self.train as u64
    }

    pub fn eval_seeds(&self) -> std::ops::Range<u64> {
        let start = self.seed + self.train as u64;
        start..start + self.eval as u64
    }
}

fn default_num_sim() -> usize {
    6
}
fn default_rollout_length() -> usize {
    128
}
fn default_hidden() -> usize {
    128
}
fn default_layers() -> usize {
    1
}
fn default_goal_embed() -> usize {
    32
}
fn default_action_embed() -> usize {
    8
}
fn default_eval_episodes() -> usize {
    200
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default)]
    pub seed: u64,
    pub budget: BudgetSpec,
    #[serde(default = "default_set")]
    pub hyper_set: HyperSet,
    #[serde(default)]
    pub ppo: PpoOverrides,
    #[serde(default = "default_num_sim")]
    pub num_sim: usize,
    #[serde(default = "default_rollout_length")]
    pub rollout_length: usize,
    #[serde(default = "default_encoder")]
    pub encoder: EncoderKind,
    #[serde(default = "default_hidden")]
    pub hidden_size: usize,
    #[serde(default = "default_layers")]
    pub rnn_layers: usize,
    #[serde(default = "default_goal_embed")]
    pub goal_embed_dim: usize,
    #[serde(default = "default_action_embed")]
    pub action_embed_dim: usize,
    #[serde(default = "default_norm")]
    pub normalization: AdvantageNorm,
    /// Terminal reward for a successful stop. Unset means 2.5 without
    /// advantage normalization and 10.0 with it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success_reward: Option<f64>,
    #[serde(default)]
    pub sensor: SensorConfig,
    #[serde(default)]
    pub maps: MapSpec,
    /// Steps between evaluations; 0 evaluates only at the end.
    #[serde(default)]
    pub eval_every: u64,
    #[serde(default = "default_eval_episodes")]
    pub eval_episodes: usize,
    #[serde(default = "default_sampler")]
    pub sampler: SamplerMode,
    /// Leaves wall-clock columns blank so repeated runs produce identical
    /// files.
    #[serde(default = "default_true")]
    pub deterministic: bool,
    #[serde(default)]
    pub env_latency_ms: f64,
    #[serde(default)]
    pub infer_latency_ms: f64,
}

fn default_set() -> HyperSet {
    HyperSet::Set2
}
fn default_encoder() -> EncoderKind {
    EncoderKind::Mlp
}
fn default_norm() -> AdvantageNorm {
    AdvantageNorm::None
}
fn default_sampler() -> SamplerMode {
    SamplerMode::Sequential
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            budget: BudgetSpec::samples(768),
            hyper_set: default_set(),
            ppo: PpoOverrides::default(),
            num_sim: default_num_sim(),
            rollout_length: default_rollout_length(),
            encoder: default_encoder(),
            hidden_size: default_hidden(),
            rnn_layers: default_layers(),
            goal_embed_dim: default_goal_embed(),
            action_embed_dim: default_action_embed(),
            normalization: default_norm(),
            success_reward: None,
            sensor: SensorConfig::default(),
            maps: MapSpec::default(),
            eval_every: 0,
            eval_episodes: default_eval_episodes(),
            sampler: default_sampler(),
            deterministic: true,
            env_latency_ms: 0.0,
            infer_latency_ms: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: TrainConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn budget(&self) -> Result<Budget> {
        self.budget.resolve()
    }

    pub fn policy_config(&self) -> PolicyConfig {
        PolicyConfig {
            encoder: self.encoder,
            hidden_size: self.hidden_size,
            rnn_layers: self.rnn_layers,
            goal_embed_dim: self.goal_embed_dim,
            action_embed_dim: self.action_embed_dim,
        }
    }

    pub fn ppo_config(&self) -> PpoConfig {
        let mut c = PpoConfig::from_set(self.hyper_set);
        let o = &self.ppo;
        c.clip_eps0 = o.clip_eps0.unwrap_or(c.clip_eps0);
        c.lr0 = o.lr0.unwrap_or(c.lr0);
        c.ppo_epochs = o.ppo_epochs.unwrap_or(c.ppo_epochs);
        c.num_minibatches = o.num_minibatches.unwrap_or(c.num_minibatches);
        c.value_coef = o.value_coef.unwrap_or(c.value_coef);
        c.entropy_coef = o.entropy_coef.unwrap_or(c.entropy_coef);
        c.max_grad_norm = o.max_grad_norm.unwrap_or(c.max_grad_norm);
        c.gae.gamma = o.gamma.unwrap_or(c.gae.gamma);
        c.gae.tau = o.tau.unwrap_or(c.gae.tau);
        c.normalization = self.normalization.strategy();
        c
    }

    pub fn nav_config(&self) -> NavConfig {
        NavConfig { sensor: self.sensor, success_reward: self.beta(), ..NavConfig::default() }
    }

    pub fn beta(&self) -> f64 {
        self.success_reward.unwrap_or(match self.normalization {
            AdvantageNorm::None => 2.5,
            _ => 10.0,
        })
    }

    pub fn latency(&self) -> Latency {
        Latency::from_millis(self.env_latency_ms, self.infer_latency_ms)
    }

    pub fn steps_per_rollout(&self) -> u64 {
        (self.num_sim * self.rollout_length) as u64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        self.budget()?;
        self.ppo_config().validate()?;
        if self.num_sim == 0 || self.rollout_length == 0 {
            return bad("num_sim and rollout_length must be positive".into());
        }
        let mb = self.ppo_config().num_minibatches;
        if !self.num_sim.is_multiple_of(mb) {
            return bad(format!("num_minibatches {mb} does not divide num_sim {}", self.num_sim));
        }
        if self.sampler == SamplerMode::DoubleBuffered && !self.num_sim.is_multiple_of(2) {
            return bad("double_buffered sampling needs an even num_sim".into());
        }
        if self.hidden_size == 0 || self.goal_embed_dim == 0 || self.action_embed_dim == 0 {
            return bad("policy dimensions must be positive".into());
        }
        if !(1..=2).contains(&self.rnn_layers) {
            return bad(format!("rnn_layers must be 1 or 2, got {}", self.rnn_layers));
        }
        if self.sensor.n_rays == 0 || !(self.sensor.max_range > 0.0) || !(self.sensor.fov > 0.0) {
            return bad("sensor needs rays, a positive range and a positive field of view".into());
        }
        let m = &self.maps;
        if m.train == 0 || m.eval == 0 || m.width == 0 || m.height == 0 || m.max_steps == 0 {
            return bad("maps need positive sizes, counts and max_steps".into());
        }
        if !(0.0..1.0).contains(&m.obstacle_density) {
            return bad("obstacle_density must lie in [0, 1)".into());
        }
        if self.eval_episodes == 0 {
            return bad("eval_episodes must be positive".into());
        }
        if !(self.env_latency_ms >= 0.0) || !(self.infer_latency_ms >= 0.0) {
            return bad("latencies must be non-negative".into());
        }
        if !self.beta().is_finite() {
            return bad("success_reward must be finite".into());
        }
        Ok(())
    }
}
