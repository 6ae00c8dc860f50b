use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::bench::{bench_throughput, throughput_csv, ThroughputRow};
use super::config::{AdvantageNorm, TrainConfig};
use super::metrics::{eval_points, spl_chart_svg};
use super::train::{best_eval, train};
use crate::error::{Error, Result};
use crate::policy::EncoderKind;
use crate::ppo::HyperSet;
use crate::rollout::SamplerMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepPreset {
    BatchSizeGrid,
    NormAdvantageGrid,
    EncoderGrid,
    RnnDepthPair,
    SamplerThroughput,
}

impl SweepPreset {
    pub const ALL: [SweepPreset; 5] = [
        SweepPreset::BatchSizeGrid,
        SweepPreset::NormAdvantageGrid,
        SweepPreset::EncoderGrid,
        SweepPreset::RnnDepthPair,
        SweepPreset::SamplerThroughput,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepPreset::BatchSizeGrid => "batch_size_grid",
            SweepPreset::NormAdvantageGrid => "norm_advantage_grid",
            SweepPreset::EncoderGrid => "encoder_grid",
            SweepPreset::RnnDepthPair => "rnn_depth_pair",
            SweepPreset::SamplerThroughput => "sampler_throughput",
        }
    }
}

impl std::str::FromStr for SweepPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown sweep preset {s:?}")))
    }
}

/// One configuration of a sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub label: String,
    pub config: TrainConfig,
}

/// The grid of a training preset, derived from `base`. The throughput preset
/// has no training cells.
pub fn preset_cells(preset: SweepPreset, base: &TrainConfig) -> Vec<SweepCell> {
    let mut cells = Vec::new();
    let mut push = |label: String, f: &dyn Fn(&mut TrainConfig)| {
        let mut config = base.clone();
        f(&mut config);
        cells.push(SweepCell { label, config });
    };
    match preset {
        SweepPreset::BatchSizeGrid => {
            for num_sim in [2, 4, 6] {
                for len in [32, 48, 64, 96, 128] {
                    push(format!("sim{num_sim}_len{len}"), &|c| {
                        c.num_sim = num_sim;
                        c.rollout_length = len;
                        c.ppo.num_minibatches = Some(2);
                    });
                }
            }
        }
        SweepPreset::NormAdvantageGrid => {
            for norm in AdvantageNorm::ALL {
                for set in [HyperSet::Set1, HyperSet::Set2] {
                    push(format!("{}_{}", norm.name(), set.name()), &|c| {
                        c.normalization = norm;
                        c.hyper_set = set;
                    });
                }
            }
        }
        SweepPreset::EncoderGrid => {
            for enc in EncoderKind::ALL {
                for norm in [AdvantageNorm::None, AdvantageNorm::PerMinibatch] {
                    for set in [HyperSet::Set1, HyperSet::Set2] {
                        push(format!("{}_{}_{}", enc.name(), norm.name(), set.name()), &|c| {
                            c.encoder = enc;
                            c.normalization = norm;
                            c.hyper_set = set;
                        });
                    }
                }
            }
        }
        SweepPreset::RnnDepthPair => {
            for layers in [1, 2] {
                push(format!("gru{layers}"), &|c| c.rnn_layers = layers);
            }
        }
        SweepPreset::SamplerThroughput => {}
    }
    cells
}

/// Half-width of the two-sided 95% Student-t interval of the mean; `None`
/// with fewer than two samples.
pub fn ci95_half_width(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let t = StudentsT::new(0.0, 1.0, n - 1.0).ok()?.inverse_cdf(0.975);
    Some(t * (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub cell: String,
    pub seed: u64,
    pub total_steps: u64,
    pub best_step: Option<u64>,
    pub best_spl: Option<f64>,
    pub best_success: Option<f64>,
    pub final_spl: Option<f64>,
    pub final_success: Option<f64>,
    pub steps_per_second: f64,
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: String,
    pub runs: usize,
    pub mean: f64,
    pub ci95: Option<f64>,
    pub mean_success: Option<f64>,
    pub success_ci95: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub runs: Vec<SweepRun>,
    pub throughput: Vec<ThroughputRow>,
    /// Per cell: best-checkpoint SPL (training presets) or steps per second
    /// (throughput preset).
    pub summary: Vec<CellSummary>,
}

fn summarize(cell: &str, values: &[f64], success: Option<&[f64]>) -> CellSummary {
    CellSummary {
        cell: cell.to_string(),
        runs: values.len(),
        mean: values.iter().sum::<f64>() / values.len().max(1) as f64,
        ci95: ci95_half_width(values),
        mean_success: success.map(|s| s.iter().sum::<f64>() / s.len().max(1) as f64),
        success_ci95: success.and_then(ci95_half_width),
    }
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Runs every cell of a preset for each seed, in parallel across runs. With
/// `out_dir`, each run writes into `<cell>_seed<N>/` and the sweep writes
/// `runs.csv`, `summary.csv` and `spl.svg`.
pub fn run_sweep(preset: SweepPreset, base: &TrainConfig, seeds: &[u64], out_dir: Option<&Path>) -> Result<SweepOutput> {
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    if preset == SweepPreset::SamplerThroughput {
        return throughput_sweep(base, seeds, out_dir);
    }
    let cells = preset_cells(preset, base);
    for c in &cells {
        c.config.validate()?;
    }
    let jobs: Vec<(usize, u64)> = (0..cells.len()).flat_map(|c| seeds.iter().map(move |&s| (c, s))).collect();
    let results = jobs
        .par_iter()
        .map(|&(c, seed)| {
            let mut cfg = cells[c].config.clone();
            cfg.seed = seed;
            let dir = out_dir.map(|d| d.join(format!("{}_seed{seed}", cells[c].label)));
            train(&cfg, dir.as_deref()).map(|rec| (c, seed, rec))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut runs = Vec::new();
    let mut curves: BTreeMap<usize, Vec<Vec<(u64, f64)>>> = BTreeMap::new();
    for (c, seed, rec) in &results {
        let best = best_eval(&rec.evals).ok();
        let last = rec.evals.last();
        runs.push(SweepRun {
            cell: cells[*c].label.clone(),
            seed: *seed,
            total_steps: rec.total_steps,
            best_step: best.map(|b| b.checkpoint_step),
            best_spl: best.map(|b| b.spl),
            best_success: best.map(|b| b.success_rate),
            final_spl: last.map(|b| b.spl),
            final_success: last.map(|b| b.success_rate),
            steps_per_second: rec.sampler.steps_per_second,
            failed: rec.failure.is_some(),
        });
        curves.entry(*c).or_default().push(eval_points(&rec.rows));
    }
    let summary = cells
        .iter()
        .map(|cell| {
            let mine: Vec<&SweepRun> = runs.iter().filter(|r| r.cell == cell.label).collect();
            let spl: Vec<f64> = mine.iter().map(|r| r.best_spl.unwrap_or(0.0)).collect();
            let succ: Vec<f64> = mine.iter().map(|r| r.best_success.unwrap_or(0.0)).collect();
            summarize(&cell.label, &spl, Some(&succ))
        })
        .collect::<Vec<_>>();

    if let Some(dir) = out_dir {
        std::fs::write(dir.join("runs.csv"), to_csv(&runs)?)?;
        std::fs::write(dir.join("summary.csv"), to_csv(&summary)?)?;
        let series: Vec<(String, Vec<(u64, f64)>)> = curves
            .iter()
            .map(|(&c, per_seed)| (cells[c].label.clone(), mean_curve(per_seed)))
            .collect();
        std::fs::write(dir.join("spl.svg"), spl_chart_svg(&series))?;
    }
    Ok(SweepOutput { runs, throughput: Vec::new(), summary })
}

/// Averages SPL curves point by point over the steps all seeds share.
fn mean_curve(per_seed: &[Vec<(u64, f64)>]) -> Vec<(u64, f64)> {
    let mut acc: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for curve in per_seed {
        for &(s, v) in curve {
            let e = acc.entry(s).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
    }
    acc.into_iter().filter(|(_, (_, n))| *n == per_seed.len()).map(|(s, (sum, n))| (s, sum / n as f64)).collect()
}

/// Both samplers at NumSim 6 and rollout length 128 with 2 ms injected env
/// and inference latency, one repetition per seed.
fn throughput_sweep(base: &TrainConfig, seeds: &[u64], out_dir: Option<&Path>) -> Result<SweepOutput> {
    let mut rows = Vec::new();
    for &seed in seeds {
        let mut cfg = base.clone();
        cfg.seed = seed;
        rows.extend(bench_throughput(&cfg, 6, 128, 2.0, 2.0, 1)?);
    }
    let summary = [SamplerMode::Sequential, SamplerMode::DoubleBuffered]
        .iter()
        .map(|&m| {
            let v: Vec<f64> = rows.iter().filter(|r| r.mode == m).map(|r| r.steps_per_second).collect();
            summarize(m.name(), &v, None)
        })
        .collect::<Vec<_>>();
    if let Some(dir) = out_dir {
        std::fs::write(dir.join("throughput.csv"), throughput_csv(&rows)?)?;
        std::fs::write(dir.join("summary.csv"), to_csv(&summary)?)?;
    }
    Ok(SweepOutput { runs: Vec::new(), throughput: rows, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes() {
        let base = TrainConfig::default();
        let grid = preset_cells(SweepPreset::BatchSizeGrid, &base);
        assert_eq!(grid.len(), 15);
        assert!(grid.iter().all(|c| c.config.ppo_config().num_minibatches == 2 && c.config.validate().is_ok()));
        assert_eq!(preset_cells(SweepPreset::NormAdvantageGrid, &base).len(), 6);
        assert_eq!(preset_cells(SweepPreset::EncoderGrid, &base).len(), 12);
        let pair = preset_cells(SweepPreset::RnnDepthPair, &base);
        assert_eq!(pair.len(), 2);
        let mut a = pair[0].config.clone();
        a.rnn_layers = 2;
        assert_eq!(a, pair[1].config);
    }

    #[test]
    fn ci_half_width() {
        assert_eq!(ci95_half_width(&[0.5]), None);
        // n = 5, s = 1: t(0.975, 4) = 2.7764451051977987.
        let xs = [-1.0, -0.5, 0.0, 0.5, 1.0];
        let s = (2.5f64 / 4.0).sqrt();
        let h = ci95_half_width(&xs).unwrap();
        assert!((h - 2.7764451051977987 * s / 5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn preset_names_parse() {
        for p in SweepPreset::ALL {
            assert_eq!(p.name().parse::<SweepPreset>().unwrap(), p);
        }
        assert!("nope".parse::<SweepPreset>().is_err());
    }
}
