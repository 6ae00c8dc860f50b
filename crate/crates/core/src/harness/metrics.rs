use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One row per PPO update; evaluation columns are filled on rows where an
/// evaluation ran.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub step: u64,
    pub wall_seconds: Option<f64>,
    pub updates: u64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
    pub lr: f64,
    pub clip_eps: f64,
    pub eval_success: Option<f64>,
    pub eval_spl: Option<f64>,
}

pub fn metrics_csv(rows: &[MetricsRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record([
            "step", "wall_seconds", "updates", "policy_loss", "value_loss", "entropy", "clip_fraction",
            "grad_norm", "lr", "clip_eps", "eval_success", "eval_spl",
        ])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    Ok(std::fs::write(path, metrics_csv(rows)?)?)
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<Vec<MetricsRow>, _>>()?)
}

/// Line chart of evaluation SPL against environment steps, one series per
/// `(label, points)` entry.
pub fn spl_chart_svg(series: &[(String, Vec<(u64, f64)>)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
    let max_step = series.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)).max().unwrap_or(1).max(1) as f64;
    let x = |s: u64| M + (W - 2.0 * M) * s as f64 / max_step;
    let y = |v: f64| H - M - (H - 2.0 * M) * v.clamp(0.0, 1.0);
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<path d="M{M} {M} V{} H{}" stroke="black" fill="none"/>"#,
        H - M,
        W - M
    );
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{v:.2}</text>"#,
            M - 6.0,
            y(v) + 4.0
        );
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">steps (max {max_step})</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(svg, r#"<text x="14" y="{}" font-size="12" transform="rotate(-90 14 {})" text-anchor="middle">SPL</text>"#, H / 2.0, H / 2.0);
    for (i, (label, points)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = points.iter().map(|&(s, v)| format!("{:.1},{:.1}", x(s), y(v))).collect();
        if !path.is_empty() {
            let _ = writeln!(svg, r#"<polyline points="{}" stroke="{color}" stroke-width="2" fill="none"/>"#, path.join(" "));
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#,
            M + 8.0,
            M + 14.0 * (i as f64 + 1.0),
            escape(label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn eval_points(rows: &[MetricsRow]) -> Vec<(u64, f64)> {
    rows.iter().filter_map(|r| r.eval_spl.map(|s| (r.step, s))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(step: u64, spl: Option<f64>) -> MetricsRow {
        MetricsRow {
            step,
            wall_seconds: None,
            updates: step / 10,
            policy_loss: -0.5,
            value_loss: 0.25,
            entropy: 1.3,
            clip_fraction: 0.0,
            grad_norm: 0.7,
            lr: 2.5e-4,
            clip_eps: 0.2,
            eval_success: spl.map(|s| s + 0.1),
            eval_spl: spl,
        }
    }

    #[test]
    fn csv_schema_and_blank_cells() {
        let text = metrics_csv(&[row(10, None), row(20, Some(0.5))]).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "step,wall_seconds,updates,policy_loss,value_loss,entropy,clip_fraction,grad_norm,lr,clip_eps,eval_success,eval_spl"
        );
        assert_eq!(lines.next().unwrap(), "10,,1,-0.5,0.25,1.3,0.0,0.7,0.00025,0.2,,");
        assert!(lines.next().unwrap().ends_with(",0.6,0.5"));
        assert!(metrics_csv(&[]).unwrap().starts_with("step,"));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let rows = vec![row(10, None), row(20, Some(0.25))];
        write_metrics_csv(&path, &rows).unwrap();
        assert_eq!(read_metrics_csv(&path).unwrap(), rows);
    }

    #[test]
    fn chart_has_one_polyline_per_series() {
        let svg = spl_chart_svg(&[("a".into(), vec![(0, 0.1), (100, 0.9)]), ("b<c".into(), vec![(50, 0.5)])]);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("b&lt;c"));
    }
}
