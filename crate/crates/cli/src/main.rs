use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pointnav::harness::{
    bench_throughput, evaluate_policy, run_sweep, select_best_checkpoint, throughput_csv, train, Checkpoint,
    EpisodeFile, EvalSet, SweepPreset, TrainConfig,
};
use pointnav::Error;

#[derive(Parser)]
#[command(name = "pointnav", version, about = "Train and evaluate PointGoal navigation agents with PPO")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent from a TOML config.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "runs/train")]
        out: PathBuf,
    },
    /// Greedy evaluation of a checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// JSON episode file, or `default` for the held-out split the
        /// checkpoint was trained against.
        #[arg(long, default_value = "default")]
        episodes: String,
    },
    /// Run a preset grid over several seeds.
    Sweep {
        #[arg(long)]
        preset: SweepPreset,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        /// Base config the preset varies; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare sequential and double-buffered collection speed.
    BenchThroughput {
        #[arg(long, default_value_t = 6)]
        num_sim: usize,
        #[arg(long, default_value_t = 128)]
        rollout_len: usize,
        #[arg(long, default_value_t = 2.0)]
        env_latency_ms: f64,
        #[arg(long, default_value_t = 2.0)]
        infer_latency_ms: f64,
        #[arg(long, default_value_t = 2)]
        rollouts: usize,
    },
}

fn run(cli: Cli) -> pointnav::Result<()> {
    match cli.command {
        Command::Train { config, seed, out } => {
            let mut cfg = TrainConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let record = train(&cfg, Some(&out))?;
            println!("steps {} updates {}", record.total_steps, record.updates);
            for e in &record.evals {
                println!("eval step {} success {:.3} spl {:.3}", e.checkpoint_step, e.success_rate, e.spl);
            }
            if let Ok(best) = select_best_checkpoint(&record) {
                if let Some(p) = best.path {
                    println!("best checkpoint {}", p.display());
                }
            }
            if let Some(msg) = record.failure {
                return Err(Error::Divergence(msg));
            }
            Ok(())
        }
        Command::Eval { checkpoint, episodes } => {
            let ck = Checkpoint::load(&checkpoint)?;
            let cfg = TrainConfig::from_toml(&ck.train_config)?;
            let set = if episodes == "default" {
                EvalSet::from_spec(&cfg.maps, cfg.eval_episodes)?
            } else {
                let text = std::fs::read_to_string(&episodes)?;
                let file: EpisodeFile =
                    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{episodes}: {e}")))?;
                file.into_set()?
            };
            let report = evaluate_policy(&ck.policy()?, &set, cfg.nav_config(), ck.total_steps)?;
            println!("episodes {} success {:.4} spl {:.4}", report.episodes, report.success_rate, report.spl);
            Ok(())
        }
        Command::Sweep { preset, seeds, config, out } => {
            let base = match config {
                Some(p) => TrainConfig::load(&p)?,
                None => TrainConfig::default(),
            };
            let seeds: Vec<u64> = (0..seeds).collect();
            let out = out.unwrap_or_else(|| PathBuf::from("runs").join(preset.name()));
            let result = run_sweep(preset, &base, &seeds, Some(&out))?;
            for s in &result.summary {
                let ci = s.ci95.map_or("-".to_string(), |c| format!("{c:.4}"));
                println!("{:<32} n={} mean={:.4} ci95={ci}", s.cell, s.runs, s.mean);
            }
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::BenchThroughput { num_sim, rollout_len, env_latency_ms, infer_latency_ms, rollouts } => {
            let rows = bench_throughput(
                &TrainConfig::default(),
                num_sim,
                rollout_len,
                env_latency_ms,
                infer_latency_ms,
                rollouts,
            )?;
            print!("{}", throughput_csv(&rows)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                Error::Divergence(_) => ExitCode::from(3),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
