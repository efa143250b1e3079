//! One-parameter sweeps over a base scenario.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{fit_relaxation_rate, steady_state};
use crate::error::{Error, Result};
use crate::model::master_equation;
use crate::observables::{mean_quanta, Mode};

use super::config::ScenarioConfig;
use super::output::{csv_field, format_float, version_string, write_json, write_text};
use super::{builtin, run_scenario, steady_scenario, RunOptions};

/// Swept parameter, named after its scenario key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    /// `gamma_a_per_lambda` and `gamma_b_per_lambda` together.
    #[serde(rename = "gamma_mode_per_lambda")]
    GammaMode,
    #[serde(rename = "gamma_a_per_lambda")]
    GammaA,
    #[serde(rename = "gamma_b_per_lambda")]
    GammaB,
    /// `gamma_1_per_lambda` and `gamma_2_per_lambda` together.
    #[serde(rename = "gamma_atom_per_lambda")]
    GammaAtom,
    #[serde(rename = "gamma_1_per_lambda")]
    Gamma1,
    #[serde(rename = "gamma_2_per_lambda")]
    Gamma2,
    #[serde(rename = "n_th")]
    NTh,
    #[serde(rename = "n_init")]
    NInit,
    /// Target squeeze factor; needs a `[squeeze]` section.
    #[serde(rename = "r")]
    R,
    /// Both truncation dimensions.
    #[serde(rename = "dim")]
    Dim,
}

impl SweepAxis {
    pub fn key(self) -> &'static str {
        match self {
            SweepAxis::GammaMode => "gamma_mode_per_lambda",
            SweepAxis::GammaA => "gamma_a_per_lambda",
            SweepAxis::GammaB => "gamma_b_per_lambda",
            SweepAxis::GammaAtom => "gamma_atom_per_lambda",
            SweepAxis::Gamma1 => "gamma_1_per_lambda",
            SweepAxis::Gamma2 => "gamma_2_per_lambda",
            SweepAxis::NTh => "n_th",
            SweepAxis::NInit => "n_init",
            SweepAxis::R => "r",
            SweepAxis::Dim => "dim",
        }
    }

    /// `base` with the axis set to `value`.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut cfg = base.clone();
        let s = &mut cfg.system;
        match self {
            SweepAxis::GammaMode => (s.gamma_a_per_lambda, s.gamma_b_per_lambda) = (value, value),
            SweepAxis::GammaA => s.gamma_a_per_lambda = value,
            SweepAxis::GammaB => s.gamma_b_per_lambda = value,
            SweepAxis::GammaAtom => (s.gamma_1_per_lambda, s.gamma_2_per_lambda) = (value, value),
            SweepAxis::Gamma1 => s.gamma_1_per_lambda = value,
            SweepAxis::Gamma2 => s.gamma_2_per_lambda = value,
            SweepAxis::NTh => s.n_th = value,
            SweepAxis::NInit => s.n_init = value,
            SweepAxis::R => match cfg.squeeze.as_mut() {
                Some(q) => q.r = value,
                None => return Err(Error::Config(vec!["axis r needs a [squeeze] section in the base scenario".into()])),
            },
            SweepAxis::Dim => {
                if !(value >= 2.0 && value.fract() == 0.0) {
                    return Err(Error::Config(vec![format!("dim = {value}: must be an integer >= 2")]));
                }
                cfg.space.dim_a = value as usize;
                cfg.space.dim_b = value as usize;
            }
        }
        Ok(cfg)
    }
}

/// Scalar each sweep row reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduce {
    /// Duan variance of the steady state.
    SteadyDuanVariance,
    /// Exponential relaxation rate of `⟨a†a⟩` towards its steady value.
    FittedRate,
    /// TMVS fidelity at the last sample.
    FinalFidelity,
}

impl Reduce {
    pub fn key(self) -> &'static str {
        match self {
            Reduce::SteadyDuanVariance => "steady_duan_variance",
            Reduce::FittedRate => "fitted_rate",
            Reduce::FinalFidelity => "final_fidelity",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub name: String,
    pub base: ScenarioConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub reduce: Reduce,
}

/// Sweep file: either an inline `[base]` scenario or `base_builtin`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    name: String,
    #[serde(default)]
    base: Option<ScenarioConfig>,
    #[serde(default)]
    base_builtin: Option<String>,
    axis: SweepAxis,
    values: Vec<f64>,
    reduce: Reduce,
}

impl SweepSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SweepFile = toml::from_str(text).map_err(|e| Error::Config(vec![e.message().trim().to_string()]))?;
        let base = match (file.base, file.base_builtin) {
            (Some(b), None) => b,
            (None, Some(name)) => {
                builtin(&name).ok_or_else(|| Error::Config(vec![format!("base_builtin: unknown scenario {name:?}")]))?
            }
            _ => return Err(Error::Config(vec!["give exactly one of [base] and base_builtin".into()])),
        };
        let spec = Self { name: file.name, base, axis: file.axis, values: file.values, reduce: file.reduce };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?).map_err(|e| match e {
            Error::Config(v) => Error::Config(v.into_iter().map(|m| format!("{}: {m}", path.display())).collect()),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.name.trim().is_empty() {
            errs.push("name must not be empty".into());
        }
        if self.values.is_empty() {
            errs.push("values must not be empty".into());
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            errs.push(format!("values: {v} is not finite"));
        }
        if let Err(Error::Config(v)) = self.base.resolve() {
            errs.extend(v.into_iter().map(|m| format!("base: {m}")));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// Scenario name of the row for `value`.
    pub fn row_name(&self, value: f64) -> String {
        format!("{}-{}-{}", self.name, self.axis.key(), value)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub name: String,
    pub result: std::result::Result<f64, String>,
}

#[derive(Serialize)]
struct RowRecord<'a> {
    value: f64,
    name: &'a str,
    reduced: Option<f64>,
    error: Option<&'a str>,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    pub files: Vec<std::path::PathBuf>,
}

impl SweepOutcome {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.result.is_err()).count()
    }
}

fn run_row(spec: &SweepSpec, value: f64, opts: &RunOptions) -> Result<f64> {
    let mut cfg = spec.axis.apply(&spec.base, value)?;
    cfg.name = spec.row_name(value);
    match spec.reduce {
        Reduce::SteadyDuanVariance => Ok(steady_scenario(&cfg, opts)?.sample.duan_variance),
        Reduce::FinalFidelity => {
            let out = run_scenario(&cfg, opts)?;
            Ok(*out.record.tmvs_fidelity.last().expect("non-empty trajectory"))
        }
        Reduce::FittedRate => {
            let out = run_scenario(&cfg, opts)?;
            let sc = &out.scenario;
            let rho = steady_state(&master_equation(&sc.params, sc.space)?)?;
            let asymptote = mean_quanta(&rho, Mode::A);
            fit_relaxation_rate(&out.record.times, &out.record.mean_quanta_a, Some(asymptote))
        }
    }
}

/// Error text with its lines joined, for one-row-per-line summaries.
fn one_line(e: &Error) -> String {
    e.to_string().lines().map(str::trim).filter(|l| !l.is_empty()).collect::<Vec<_>>().join(" ")
}

/// Runs every row, concurrently up to `opts.workers`. A failing row is
/// recorded in its result without stopping the others.
pub fn run_sweep(spec: &SweepSpec, opts: &RunOptions) -> Result<SweepOutcome> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        spec.values
            .par_iter()
            .map(|&value| SweepRow {
                value,
                name: spec.row_name(value),
                result: run_row(spec, value, opts).map_err(|e| one_line(&e)),
            })
            .collect()
    });

    let mut files = Vec::new();
    if let Some(dir) = &opts.out_dir {
        let mut csv = format!("{},{},error\n", spec.axis.key(), spec.reduce.key());
        for row in &rows {
            let (reduced, error) = match &row.result {
                Ok(x) => (format_float(*x), String::new()),
                Err(e) => (String::new(), csv_field(e)),
            };
            csv.push_str(&format!("{},{reduced},{error}\n", format_float(row.value)));
        }
        let csv_path = dir.join(format!("{}-summary.csv", spec.name));
        write_text(&csv_path, &csv)?;
        let json_path = dir.join(format!("{}-sweep.json", spec.name));
        let records: Vec<RowRecord> = rows
            .iter()
            .map(|r| RowRecord {
                value: r.value,
                name: &r.name,
                reduced: r.result.as_ref().ok().copied(),
                error: r.result.as_ref().err().map(String::as_str),
            })
            .collect();
        write_json(
            &json_path,
            &serde_json::json!({
                "name": spec.name,
                "version": version_string(),
                "axis": spec.axis.key(),
                "reduce": spec.reduce.key(),
                "base": spec.base,
                "rows": records,
            }),
        )?;
        files.push(csv_path);
        files.push(json_path);
    }
    Ok(SweepOutcome { rows, files })
}
