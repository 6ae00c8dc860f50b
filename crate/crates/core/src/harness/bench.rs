use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::evaluate::build_maps;
use super::train::episode_seed;
use crate::error::Result;
use crate::navsim::{AutoResetEnv, EpisodeSource};
use crate::policy::Policy;
use crate::rollout::{Collector, Latency, SamplerMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputRow {
    pub mode: SamplerMode,
    pub num_sim: usize,
    pub rollout_length: usize,
    pub env_latency_ms: f64,
    pub infer_latency_ms: f64,
    pub steps_per_second: f64,
}

/// Measures collection throughput of both samplers on identical
/// environments and policy, `rollouts` rollouts each.
pub fn bench_throughput(
    base: &TrainConfig,
    num_sim: usize,
    rollout_length: usize,
    env_latency_ms: f64,
    infer_latency_ms: f64,
    rollouts: usize,
) -> Result<Vec<ThroughputRow>> {
    let (train_maps, _) = build_maps(&base.maps)?;
    let latency = Latency::from_millis(env_latency_ms, infer_latency_ms);
    let mut rows = Vec::new();
    for mode in [SamplerMode::Sequential, SamplerMode::DoubleBuffered] {
        let mut policy =
            Policy::new(base.policy_config(), base.sensor.n_rays, &mut ChaCha8Rng::seed_from_u64(base.seed))?;
        let envs = (0..num_sim)
            .map(|e| {
                let source = EpisodeSource::new(
                    train_maps.clone(),
                    episode_seed(base.seed, e),
                    base.maps.min_geodesic,
                    base.maps.max_steps,
                );
                AutoResetEnv::new(base.nav_config(), source)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut collector = Collector::new(envs, policy.state_size(), base.seed, latency)?;
        for _ in 0..rollouts {
            collector.collect(&mut policy, rollout_length, mode)?;
        }
        rows.push(ThroughputRow {
            mode,
            num_sim,
            rollout_length,
            env_latency_ms,
            infer_latency_ms,
            steps_per_second: collector.stats().steps_per_second,
        });
    }
    Ok(rows)
}

pub fn throughput_csv(rows: &[ThroughputRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}
