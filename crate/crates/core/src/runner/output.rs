//! CSV, SVG and manifest files.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::dynamics::TrajectoryRecord;
use crate::error::Result;
use crate::integrate::IntegratorStats;
use crate::observables::{Sample, Witness};

use super::config::ScenarioConfig;

pub const CSV_COLUMNS: [&str; 9] = [
    "t",
    "mean_quanta_a",
    "mean_quanta_b",
    "duan_variance",
    "tmvs_fidelity",
    "pop_atom_0",
    "pop_atom_1",
    "pop_atom_2",
    "leakage",
];

/// Flag set in a manifest when the truncation leakage exceeded its limit.
pub const TRUNCATION_SUSPECT: &str = "truncation-suspect";

/// 17 significant digits, enough to round-trip an `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn push_row(out: &mut String, t: f64, s: &Sample) {
    let cols = [
        t,
        s.mean_quanta_a,
        s.mean_quanta_b,
        s.duan_variance,
        s.tmvs_fidelity,
        s.atom_populations[0],
        s.atom_populations[1],
        s.atom_populations[2],
        s.leakage,
    ];
    let row: Vec<String> = cols.iter().map(|&x| format_float(x)).collect();
    out.push_str(&row.join(","));
    out.push('\n');
}

pub fn csv_header() -> String {
    CSV_COLUMNS.join(",") + "\n"
}

/// Trajectory as CSV text.
pub fn trajectory_csv(record: &TrajectoryRecord) -> String {
    let mut out = csv_header();
    for k in 0..record.len() {
        let s = Sample {
            mean_quanta_a: record.mean_quanta_a[k],
            mean_quanta_b: record.mean_quanta_b[k],
            duan_variance: record.duan_variance[k],
            tmvs_fidelity: record.tmvs_fidelity[k],
            atom_populations: record.atom_populations[k],
            leakage: record.truncation_leakage[k],
        };
        push_row(&mut out, record.times[k], &s);
    }
    out
}

/// A single steady-state row, with `t` written as `inf`.
pub fn steady_csv(sample: &Sample) -> String {
    let mut out = csv_header();
    push_row(&mut out, f64::INFINITY, sample);
    out
}

/// Quotes a CSV field when it contains a delimiter, quote or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Line plot of the named series against time. Unknown names are skipped.
pub fn trajectory_svg(record: &TrajectoryRecord, series: &[String], title: &str) -> String {
    let (w, h, margin) = (720.0, 440.0, 60.0);
    let lines: Vec<(&str, Vec<f64>)> =
        series.iter().filter_map(|n| record.series(n).map(|v| (n.as_str(), v))).collect();
    let t_max = record.times.last().copied().unwrap_or(1.0).max(f64::MIN_POSITIVE);
    let (mut lo, mut hi) = lines
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !(lo.is_finite() && hi.is_finite()) {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        hi += 0.5;
        lo -= 0.5;
    }
    let x = |t: f64| margin + (w - 2.0 * margin) * t / t_max;
    let y = |v: f64| h - margin - (h - 2.0 * margin) * (v - lo) / (hi - lo);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{m} {m} V{b} H{r}" fill="none" stroke="black"/>"#,
        m = margin,
        b = h - margin,
        r = w - margin
    );
    for (v, label) in [(lo, lo), (hi, hi)] {
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{:.4}</text>"#, margin - 6.0, y(v) + 4.0, label);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">0</text>"#, margin, h - margin + 16.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{t_max}</text>"#, w - margin, h - margin + 16.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">λt</text>"#, w / 2.0, h - 18.0);
    for (k, (name, v)) in lines.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<String> = record.times.iter().zip(v).map(|(&t, &v)| format!("{:.2},{:.2}", x(t), y(v))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let ly = margin + 16.0 * k as f64;
        let _ = writeln!(s, r#"<text x="{}" y="{ly}" font-family="sans-serif" font-size="12" fill="{color}" text-anchor="end">{name}</text>"#, w - margin - 4.0);
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Version string in `git describe` style.
pub fn version_string() -> String {
    format!("{}-{}", env!("CARGO_PKG_VERSION"), option_env!("TMVS_GIT_DESCRIBE").unwrap_or("unknown"))
}

#[derive(Clone, Debug, Serialize)]
pub struct TruncationDiagnostics {
    pub dim_a: usize,
    pub dim_b: usize,
    pub max_leakage: f64,
    pub final_leakage: f64,
    pub leakage_limit: f64,
}

/// Run summary written next to the data files.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub name: String,
    pub kind: &'static str,
    pub version: String,
    pub config: ScenarioConfig,
    pub truncation: TruncationDiagnostics,
    pub flags: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evolved_dim: Option<usize>,
    #[serde(rename = "final")]
    pub final_sample: Sample,
    pub witness: Witness,
    pub elapsed_seconds: f64,
    pub files: Vec<String>,
}

impl Manifest {
    pub fn is_truncation_suspect(&self) -> bool {
        self.flags.iter().any(|f| f == TRUNCATION_SUSPECT)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("manifest serializes") + "\n";
    write_text(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_with_seventeen_digits() {
        for x in [1.0 / 3.0, std::f64::consts::PI * 1e-12, -2.5e300, 0.0] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            let mantissa = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(mantissa.len(), 17, "{s}");
        }
    }

    #[test]
    fn steady_row_has_every_column() {
        let s = Sample {
            mean_quanta_a: 1.0,
            mean_quanta_b: 1.0,
            duan_variance: 0.5,
            tmvs_fidelity: 0.9,
            atom_populations: [1.0, 0.0, 0.0],
            leakage: 0.0,
        };
        let text = steady_csv(&s);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,mean_quanta_a,mean_quanta_b,duan_variance,tmvs_fidelity,pop_atom_0,pop_atom_1,pop_atom_2,leakage");
        assert_eq!(lines[1].split(',').count(), 9);
        assert!(lines[1].starts_with("inf,"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn quoting() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a, \"b\""), "\"a, \"\"b\"\"\"");
    }
}
