//! Report records (one JSON object per line), aligned text tables and
//! plot-ready tables.

use std::fmt::Write as _;
use std::path::Path;

use gaitkin_core::pipeline::{EvalReport, JointErrors, SweepPoint};
use gaitkin_core::stream::LatencySummary;
use serde::Serialize;

use crate::io::IoError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub r_hip: f64,
    pub l_hip: f64,
    pub r_knee: f64,
    pub l_knee: f64,
    pub hip_mean: f64,
    pub knee_mean: f64,
    pub overall: f64,
    pub count: usize,
}

impl From<&JointErrors> for ErrorRecord {
    fn from(e: &JointErrors) -> Self {
        let [r_hip, l_hip, r_knee, l_knee] = e.per_joint;
        Self {
            r_hip,
            l_hip,
            r_knee,
            l_knee,
            hip_mean: e.hip_mean(),
            knee_mean: e.knee_mean(),
            overall: e.overall(),
            count: e.count,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpeedRecord {
    pub condition: String,
    #[serde(flatten)]
    pub errors: ErrorRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRecord {
    pub name: String,
    #[serde(flatten)]
    pub errors: ErrorRecord,
    pub per_speed: Vec<SpeedRecord>,
}

impl ReportRecord {
    pub fn new(name: impl Into<String>, report: &EvalReport) -> Self {
        Self {
            name: name.into(),
            errors: (&report.errors).into(),
            per_speed: report
                .per_speed
                .iter()
                .map(|b| SpeedRecord {
                    condition: b.condition.clone(),
                    errors: (&b.errors).into(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    /// One JSON record per line.
    Jsonl,
    /// Aligned columns.
    Text,
    Both,
}

fn write(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| IoError::io(path, e))
}

pub fn to_jsonl<T: Serialize>(records: &[T]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
        .collect()
}

/// Per-joint table followed by the per-speed breakdown of every record.
pub fn to_text(records: &[ReportRecord]) -> String {
    let width = records
        .iter()
        .map(|r| r.name.len())
        .max()
        .unwrap_or(0)
        .max(5);
    let mut s = String::new();
    let head = |s: &mut String, first: &str| {
        let _ = writeln!(
            s,
            "{first:<width$}  {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>7}",
            "r_hip", "l_hip", "r_knee", "l_knee", "hip", "knee", "overall", "n"
        );
    };
    let row = |s: &mut String, name: &str, e: &ErrorRecord| {
        let _ = writeln!(
            s,
            "{name:<width$}  {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>8.3} {:>7}",
            e.r_hip, e.l_hip, e.r_knee, e.l_knee, e.hip_mean, e.knee_mean, e.overall, e.count
        );
    };
    head(&mut s, "trial");
    for r in records {
        row(&mut s, &r.name, &r.errors);
    }
    for r in records.iter().filter(|r| !r.per_speed.is_empty()) {
        let _ = writeln!(s, "\n{} by speed (RMSE, deg)", r.name);
        head(&mut s, "speed");
        for b in &r.per_speed {
            row(&mut s, &b.condition, &b.errors);
        }
    }
    s
}

/// Write `<stem>.jsonl` and/or `<stem>.txt` in `dir`.
pub fn write_reports(
    dir: &Path,
    stem: &str,
    records: &[ReportRecord],
    format: ReportFormat,
) -> Result<(), IoError> {
    if matches!(format, ReportFormat::Jsonl | ReportFormat::Both) {
        write(&dir.join(format!("{stem}.jsonl")), &to_jsonl(records))?;
    }
    if matches!(format, ReportFormat::Text | ReportFormat::Both) {
        write(&dir.join(format!("{stem}.txt")), &to_text(records))?;
    }
    Ok(())
}

/// `trial,joint,rmse_deg` rows for a grouped bar chart.
pub fn per_joint_table(records: &[ReportRecord]) -> String {
    let mut s = String::from("trial,joint,rmse_deg\n");
    for r in records {
        let e = &r.errors;
        for (j, v) in [
            ("r_hip", e.r_hip),
            ("l_hip", e.l_hip),
            ("r_knee", e.r_knee),
            ("l_knee", e.l_knee),
        ] {
            let _ = writeln!(s, "{},{j},{v:.6}", r.name);
        }
    }
    s
}

/// `trial,speed,hip_rmse_deg,knee_rmse_deg,overall_rmse_deg,count` rows.
pub fn per_speed_table(records: &[ReportRecord]) -> String {
    let mut s = String::from("trial,speed,hip_rmse_deg,knee_rmse_deg,overall_rmse_deg,count\n");
    for r in records {
        for b in &r.per_speed {
            let e = &b.errors;
            let _ = writeln!(
                s,
                "{},{},{:.6},{:.6},{:.6},{}",
                r.name, b.condition, e.hip_mean, e.knee_mean, e.overall, e.count
            );
        }
    }
    s
}

/// `ratio,sk_items,adapted_rmse_deg,sk_only_rmse_deg` rows.
pub fn ratio_curve_table(points: &[SweepPoint]) -> String {
    let mut s = String::from("ratio,sk_items,adapted_rmse_deg,sk_only_rmse_deg\n");
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{:.6},{:.6}",
            p.ratio,
            p.sk_items,
            p.adapted.overall(),
            p.sk_only.overall()
        );
    }
    s
}

pub fn write_table(path: &Path, table: &str) -> Result<(), IoError> {
    write(path, table)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LatencyRecord {
    pub ticks: usize,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub max_ms: f64,
    pub violations: usize,
    pub budget_ms: f64,
    pub dropped: usize,
}

impl LatencyRecord {
    pub fn new(s: &LatencySummary, dropped: usize) -> Self {
        Self {
            ticks: s.ticks,
            p50_ms: s.p50_ms,
            p95_ms: s.p95_ms,
            max_ms: s.max_ms,
            violations: s.violations,
            budget_ms: s.budget_ms,
            dropped,
        }
    }

    pub fn to_text(&self) -> String {
        format!(
            "ticks {}  p50 {:.3} ms  p95 {:.3} ms  max {:.3} ms  over {:.0} ms budget: {}  dropped: {}\n",
            self.ticks, self.p50_ms, self.p95_ms, self.max_ms, self.budget_ms, self.violations, self.dropped
        )
    }
}
