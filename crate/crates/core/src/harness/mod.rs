//! Experiment orchestration: configs, the training loop, evaluation,
//! checkpoints, metrics output and sweep presets.

mod bench;
mod checkpoint;
mod config;
mod evaluate;
mod metrics;
mod sweep;
mod train;

pub use bench::{bench_throughput, throughput_csv, ThroughputRow};
pub use checkpoint::Checkpoint;
pub use config::{AdvantageNorm, Budget, BudgetSpec, MapSpec, PpoOverrides, TrainConfig};
pub use evaluate::{
    build_maps, evaluate, evaluate_policy, EpisodeEntry, EpisodeFile, EvalAgent, EvalReport, EvalSet, MapEntry,
    MapSet, PolicyAgent, ScriptedOracle, StopAgent,
};
pub use metrics::{eval_points, metrics_csv, read_metrics_csv, spl_chart_svg, write_metrics_csv, MetricsRow};
pub use sweep::{ci95_half_width, preset_cells, run_sweep, CellSummary, SweepCell, SweepOutput, SweepPreset, SweepRun};
pub use train::{best_eval, episode_seed, select_best_checkpoint, train, CheckpointRef, RunRecord};
