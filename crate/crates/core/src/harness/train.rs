use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::checkpoint::Checkpoint;
use super::config::{Budget, TrainConfig};
use super::evaluate::{build_maps, evaluate_policy, EvalReport, EvalSet};
use super::metrics::{eval_points, spl_chart_svg, write_metrics_csv, MetricsRow};
use crate::error::{Error, Result};
use crate::navsim::{AutoResetEnv, EpisodeSource};
use crate::policy::Policy;
use crate::ppo::Learner;
use crate::rollout::{Collector, SamplerStats};

/// Distinct stream offsets so the policy, optimizer, action sampling and
/// episode generation never share random numbers.
const SHUFFLE_STREAM: u64 = 0x1111_2222_3333_4444;
const ACTION_STREAM: u64 = 0x5555_6666_7777_8888;
const EPISODE_STREAM: u64 = 0x9999_AAAA_BBBB_CCCC;

pub fn episode_seed(seed: u64, env: usize) -> u64 {
    (seed ^ EPISODE_STREAM).wrapping_add((env as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointRef {
    pub step: u64,
    pub path: Option<PathBuf>,
}

/// Everything a finished (or failed) run produced.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config: TrainConfig,
    pub rows: Vec<MetricsRow>,
    pub evals: Vec<EvalReport>,
    pub checkpoints: Vec<CheckpointRef>,
    pub sampler: SamplerStats,
    pub total_steps: u64,
    pub updates: u64,
    /// Divergence message when training stopped early.
    pub failure: Option<String>,
    /// Snapshot at the best evaluation (max SPL, earliest on ties).
    pub best: Option<Checkpoint>,
    pub last: Checkpoint,
}

/// Max SPL, earliest step on ties.
pub fn best_eval(evals: &[EvalReport]) -> Result<&EvalReport> {
    let mut best: Option<&EvalReport> = None;
    for e in evals {
        match best {
            Some(b) if e.spl < b.spl || (e.spl == b.spl && e.checkpoint_step >= b.checkpoint_step) => {}
            _ => best = Some(e),
        }
    }
    best.ok_or(Error::NoEvaluations)
}

pub fn select_best_checkpoint(run: &RunRecord) -> Result<CheckpointRef> {
    let best = best_eval(&run.evals)?;
    Ok(run
        .checkpoints
        .iter()
        .find(|c| c.step == best.checkpoint_step)
        .cloned()
        .unwrap_or(CheckpointRef { step: best.checkpoint_step, path: None }))
}

fn snapshot(config: &TrainConfig, policy: &Policy, learner: &Learner, steps: u64) -> Checkpoint {
    Checkpoint {
        train_config: config.to_toml(),
        total_steps: steps,
        policy_config: *policy.net.config(),
        n_rays: policy.net.n_rays(),
        params: policy.params.clone(),
        adam: learner.adam.clone(),
        moments: learner.moments,
        shuffle_rng: learner.rng.clone(),
    }
}

/// Collect/update loop until the budget is spent, with periodic greedy
/// evaluation on the held-out split. With `out_dir`, writes `config.toml`,
/// `metrics.csv`, `spl.svg`, one checkpoint per evaluation and `final.ckpt`.
pub fn train(config: &TrainConfig, out_dir: Option<&Path>) -> Result<RunRecord> {
    config.validate()?;
    let budget = config.budget()?;
    let started = Instant::now();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("config.toml"), config.to_toml())?;
    }

    let nav = config.nav_config();
    let (train_maps, _) = build_maps(&config.maps)?;
    let eval_set = EvalSet::from_spec(&config.maps, config.eval_episodes)?;
    let mut policy = Policy::new(config.policy_config(), config.sensor.n_rays, &mut ChaCha8Rng::seed_from_u64(config.seed))?;
    let mut learner = Learner::new(config.ppo_config(), policy.net.num_params(), config.seed ^ SHUFFLE_STREAM)?;
    let envs = (0..config.num_sim)
        .map(|e| {
            let source = EpisodeSource::new(
                train_maps.clone(),
                episode_seed(config.seed, e),
                config.maps.min_geodesic,
                config.maps.max_steps,
            );
            AutoResetEnv::new(nav, source)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut collector = Collector::new(envs, policy.state_size(), config.seed ^ ACTION_STREAM, config.latency())?;

    let mut record = RunRecord {
        config: config.clone(),
        rows: Vec::new(),
        evals: Vec::new(),
        checkpoints: Vec::new(),
        sampler: SamplerStats::default(),
        total_steps: 0,
        updates: 0,
        failure: None,
        best: None,
        last: snapshot(config, &policy, &learner, 0),
    };
    let mut next_eval = config.eval_every;
    let mut best_spl = f64::NEG_INFINITY;

    loop {
        let exhausted = match budget {
            Budget::Samples(n) => record.total_steps >= n,
            Budget::WallSeconds(s) => started.elapsed().as_secs_f64() >= s,
        };
        if exhausted {
            break;
        }
        // A diverged update leaves NaNs behind; keep the last sound state.
        let sound = (policy.params.clone(), learner.clone());
        let step_result = (|| -> Result<crate::ppo::UpdateReport> {
            let mut buffer = collector.collect(&mut policy, config.rollout_length, config.sampler)?;
            let steps = record.total_steps + config.steps_per_rollout();
            let progress = match budget {
                Budget::Samples(n) => (steps as f64 / n as f64).min(1.0),
                Budget::WallSeconds(s) => {
                    if s > 0.0 {
                        (started.elapsed().as_secs_f64() / s).min(1.0)
                    } else {
                        1.0
                    }
                }
            };
            learner.update(&mut policy, &mut buffer, progress)
        })();
        let report = match step_result {
            Ok(r) => r,
            Err(Error::Divergence(msg)) => {
                (policy.params, learner) = sound;
                record.failure = Some(msg);
                break;
            }
            Err(e) => return Err(e),
        };
        record.total_steps += config.steps_per_rollout();
        record.updates += 1;
        let mean = report.mean();
        let mut row = MetricsRow {
            step: record.total_steps,
            wall_seconds: (!config.deterministic).then(|| started.elapsed().as_secs_f64()),
            updates: record.updates,
            policy_loss: mean.policy_loss,
            value_loss: mean.value_loss,
            entropy: mean.entropy,
            clip_fraction: mean.clip_fraction,
            grad_norm: mean.grad_norm_pre_clip,
            lr: report.lr,
            clip_eps: report.clip,
            eval_success: None,
            eval_spl: None,
        };
        if config.eval_every > 0 && record.total_steps >= next_eval {
            while next_eval <= record.total_steps {
                next_eval += config.eval_every;
            }
            run_eval(config, &policy, &learner, &eval_set, out_dir, &mut record, &mut row, &mut best_spl)?;
        }
        record.rows.push(row);
    }

    record.last = snapshot(config, &policy, &learner, record.total_steps);
    let evaluated_last = record.rows.last().is_some_and(|r| r.eval_spl.is_some());
    if record.failure.is_none() && record.updates > 0 && !evaluated_last {
        let mut row = record.rows.pop().expect("at least one update");
        run_eval(config, &policy, &learner, &eval_set, out_dir, &mut record, &mut row, &mut best_spl)?;
        record.rows.push(row);
    }
    record.sampler = collector.stats();

    if let Some(dir) = out_dir {
        write_metrics_csv(&dir.join("metrics.csv"), &record.rows)?;
        record.last.save(&dir.join("final.ckpt"))?;
        let label = format!("seed {}", config.seed);
        std::fs::write(dir.join("spl.svg"), spl_chart_svg(&[(label, eval_points(&record.rows))]))?;
    }
    Ok(record)
}

#[allow(clippy::too_many_arguments)]
fn run_eval(
    config: &TrainConfig,
    policy: &Policy,
    learner: &Learner,
    eval_set: &EvalSet,
    out_dir: Option<&Path>,
    record: &mut RunRecord,
    row: &mut MetricsRow,
    best_spl: &mut f64,
) -> Result<()> {
    let report = evaluate_policy(policy, eval_set, config.nav_config(), record.total_steps)?;
    row.eval_success = Some(report.success_rate);
    row.eval_spl = Some(report.spl);
    record.evals.push(report);
    let ck = snapshot(config, policy, learner, record.total_steps);
    let path = match out_dir {
        Some(dir) => {
            let p = dir.join(format!("checkpoint_{:010}.ckpt", record.total_steps));
            ck.save(&p)?;
            Some(p)
        }
        None => None,
    };
    record.checkpoints.push(CheckpointRef { step: record.total_steps, path });
    if report.spl > *best_spl {
        *best_spl = report.spl;
        record.best = Some(ck);
    }
    Ok(())
}
