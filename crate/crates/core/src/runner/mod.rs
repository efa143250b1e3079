//! Scenario files, sweeps and the data files they produce.

mod builtin;
mod config;
mod output;
mod sweep;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{evolve, initial_state, steady_state, validate_rwa, Generator, RwaReport, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::hilbert::LEAKAGE_LIMIT;
use crate::model::master_equation;
use crate::observables::{ObservableSet, Sample};

pub use builtin::{builtin, builtin_description, builtin_toml, BUILTIN_NAMES};
pub use config::{
    DrivesSection, EvolveSection, FullModelSection, ObservablesSection, OutputSection, RwaSection, Scenario,
    ScenarioConfig, SpaceSection, SqueezeSection, SystemSection, DEFAULT_RWA_BOUND, DRIVE_CONSISTENCY_TOL,
};
pub use output::{
    csv_header, format_float, steady_csv, trajectory_csv, trajectory_svg, version_string, Manifest,
    TruncationDiagnostics, CSV_COLUMNS, TRUNCATION_SUSPECT,
};
pub use sweep::{run_sweep, Reduce, SweepAxis, SweepOutcome, SweepRow, SweepSpec};

/// Where and how a command writes its files.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// No files are written when `None`.
    pub out_dir: Option<PathBuf>,
    /// Overrides the scenario's `output.plot`.
    pub plot: Option<bool>,
    /// Concurrent sweep rows; the rayon default when `None`.
    pub workers: Option<usize>,
}

impl RunOptions {
    pub fn in_dir(dir: impl Into<PathBuf>) -> Self {
        Self { out_dir: Some(dir.into()), ..Self::default() }
    }

    fn path(&self, file: &str) -> Option<PathBuf> {
        self.out_dir.as_ref().map(|d| d.join(file))
    }
}

/// Loads a scenario file, or a built-in scenario when `arg` names one and
/// no such file exists.
pub fn load_scenario(arg: &str) -> Result<ScenarioConfig> {
    let path = Path::new(arg);
    if !path.exists() {
        if let Some(cfg) = builtin(arg) {
            return Ok(cfg);
        }
    }
    ScenarioConfig::load(path)
}

/// Process exit status for a failed command: 1 for configuration and I/O
/// problems, 2 for numerical failures.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::Io(_)
        | Error::InvalidArgument(_)
        | Error::InvalidDimension(_)
        | Error::InvalidIndex(_)
        | Error::NoSqueezeSolution(_)
        | Error::InconsistentDrives(_) => 1,
        _ => 2,
    }
}

/// Exit status of a sweep in which some rows failed.
pub const PARTIAL_SWEEP_EXIT: i32 = 3;

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub scenario: Scenario,
    pub record: TrajectoryRecord,
    pub manifest: Manifest,
    pub files: Vec<PathBuf>,
}

fn flags(max_leakage: f64) -> Vec<String> {
    if max_leakage > LEAKAGE_LIMIT {
        vec![TRUNCATION_SUSPECT.to_string()]
    } else {
        Vec::new()
    }
}

fn file_names(files: &[PathBuf]) -> Vec<String> {
    files.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect()
}

/// Evolves a scenario under the sideband master equation and writes its
/// CSV, optional SVG and manifest.
pub fn run_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let started = Instant::now();
    let sc = cfg.resolve()?;
    let generator = master_equation(&sc.params, sc.space)?;
    let rho0 = initial_state(&sc.params, sc.space)?;
    let observables = ObservableSet::new(sc.space, sc.target, sc.duan);
    let mut record = evolve(&rho0, Generator::Static(&generator), &sc.evolve, &observables)?;
    record.params_snapshot = Some(sc.params.clone());

    let last = record.len() - 1;
    let final_sample = Sample {
        mean_quanta_a: record.mean_quanta_a[last],
        mean_quanta_b: record.mean_quanta_b[last],
        duan_variance: record.duan_variance[last],
        tmvs_fidelity: record.tmvs_fidelity[last],
        atom_populations: record.atom_populations[last],
        leakage: record.truncation_leakage[last],
    };

    let csv_path = opts.path(&format!("{}.csv", sc.name));
    let svg_path = opts.plot.unwrap_or(sc.plot).then(|| opts.path(&format!("{}.svg", sc.name))).flatten();
    let manifest_path = opts.path(&format!("{}.manifest.json", sc.name));
    let files: Vec<PathBuf> = [&csv_path, &svg_path, &manifest_path].into_iter().flatten().cloned().collect();

    let manifest = Manifest {
        name: sc.name.clone(),
        kind: "run",
        version: version_string(),
        config: cfg.clone(),
        truncation: TruncationDiagnostics {
            dim_a: sc.space.dim_a(),
            dim_b: sc.space.dim_b(),
            max_leakage: record.max_leakage(),
            final_leakage: final_sample.leakage,
            leakage_limit: LEAKAGE_LIMIT,
        },
        flags: flags(record.max_leakage()),
        integrator: Some(record.metadata.integrator),
        evolved_dim: Some(record.metadata.evolved_dim),
        final_sample,
        witness: observables.witness(&final_sample),
        elapsed_seconds: started.elapsed().as_secs_f64(),
        files: file_names(&files),
    };

    if let Some(p) = &csv_path {
        output::write_text(p, &trajectory_csv(&record))?;
    }
    if let Some(p) = &svg_path {
        output::write_text(p, &trajectory_svg(&record, &sc.plot_series, &sc.name))?;
    }
    if let Some(p) = &manifest_path {
        output::write_json(p, &manifest)?;
    }
    Ok(RunOutcome { scenario: sc, record, manifest, files })
}

#[derive(Clone, Debug)]
pub struct SteadyOutcome {
    pub scenario: Scenario,
    pub sample: Sample,
    pub manifest: Manifest,
    pub files: Vec<PathBuf>,
}

/// Steady state of a scenario's master equation.
pub fn steady_scenario(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<SteadyOutcome> {
    let started = Instant::now();
    let sc = cfg.resolve()?;
    let generator = master_equation(&sc.params, sc.space)?;
    let rho = steady_state(&generator)?;
    let observables = ObservableSet::new(sc.space, sc.target, sc.duan);
    let sample = observables.measure(&rho)?;

    let csv_path = opts.path(&format!("{}-steady.csv", sc.name));
    let manifest_path = opts.path(&format!("{}-steady.manifest.json", sc.name));
    let files: Vec<PathBuf> = [&csv_path, &manifest_path].into_iter().flatten().cloned().collect();
    let manifest = Manifest {
        name: sc.name.clone(),
        kind: "steady",
        version: version_string(),
        config: cfg.clone(),
        truncation: TruncationDiagnostics {
            dim_a: sc.space.dim_a(),
            dim_b: sc.space.dim_b(),
            max_leakage: sample.leakage,
            final_leakage: sample.leakage,
            leakage_limit: LEAKAGE_LIMIT,
        },
        flags: flags(sample.leakage),
        integrator: None,
        evolved_dim: None,
        final_sample: sample,
        witness: observables.witness(&sample),
        elapsed_seconds: started.elapsed().as_secs_f64(),
        files: file_names(&files),
    };
    if let Some(p) = &csv_path {
        output::write_text(p, &steady_csv(&sample))?;
    }
    if let Some(p) = &manifest_path {
        output::write_json(p, &manifest)?;
    }
    Ok(SteadyOutcome { scenario: sc, sample, manifest, files })
}

#[derive(Clone, Debug, Serialize)]
pub struct RwaRow {
    #[serde(flatten)]
    pub report: RwaReport,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RwaOutcome {
    pub name: String,
    pub version: String,
    pub bound: f64,
    pub rows: Vec<RwaRow>,
    #[serde(skip)]
    pub files: Vec<PathBuf>,
}

impl RwaOutcome {
    /// Whether the trace distance decreases strictly along increasing ratio.
    pub fn monotone(&self) -> bool {
        let mut rows: Vec<&RwaRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| a.report.nu_over_coupling.total_cmp(&b.report.nu_over_coupling));
        rows.windows(2).all(|w| w[1].report.max_trace_distance < w[0].report.max_trace_distance)
    }
}

pub const RWA_COLUMNS: [&str; 7] = [
    "nu_over_coupling",
    "max_trace_distance",
    "max_dev_mean_quanta_a",
    "max_dev_mean_quanta_b",
    "max_dev_duan_variance",
    "max_dev_tmvs_fidelity",
    "pass",
];

/// Compares sideband and full-model evolutions at each configured ratio
/// ν/|λ_1x|. A ratio passes when the largest trace distance between the
/// reduced motional states stays within the bound.
pub fn validate_command(cfg: &ScenarioConfig, opts: &RunOptions) -> Result<RwaOutcome> {
    let sc = cfg.resolve()?;
    let (full, ratios, bound) = cfg.rwa_settings()?;
    let mut params = sc.params.clone();
    params.full = Some(full);
    let observables = ObservableSet::new(sc.space, sc.target, sc.duan);
    let reports: Vec<Result<RwaReport>> =
        ratios.par_iter().map(|&x| validate_rwa(&params, &sc.evolve, x, sc.space, &observables)).collect();
    let rows = reports
        .into_iter()
        .map(|r| r.map(|report| RwaRow { pass: report.max_trace_distance <= bound, report }))
        .collect::<Result<Vec<_>>>()?;

    let mut csv = RWA_COLUMNS.join(",") + "\n";
    for row in &rows {
        let r = &row.report;
        let nums = [
            r.nu_over_coupling,
            r.max_trace_distance,
            r.max_dev_mean_quanta_a,
            r.max_dev_mean_quanta_b,
            r.max_dev_duan_variance,
            r.max_dev_tmvs_fidelity,
        ];
        let cells: Vec<String> = nums.iter().map(|&x| format_float(x)).collect();
        csv.push_str(&format!("{},{}\n", cells.join(","), row.pass));
    }
    let csv_path = opts.path(&format!("{}-rwa.csv", sc.name));
    let json_path = opts.path(&format!("{}-rwa.json", sc.name));
    let outcome = RwaOutcome {
        name: sc.name,
        version: version_string(),
        bound,
        rows,
        files: [csv_path.clone(), json_path.clone()].into_iter().flatten().collect(),
    };
    if let Some(p) = &csv_path {
        output::write_text(p, &csv)?;
    }
    if let Some(p) = &json_path {
        output::write_json(p, &outcome)?;
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(gamma: f64) -> ScenarioConfig {
        let mut cfg = builtin("fig2-gamma-0.001").unwrap();
        cfg.name = "tiny".into();
        cfg.space = SpaceSection { dim_a: 4, dim_b: 4 };
        cfg.system.gamma_a_per_lambda = gamma;
        cfg.system.gamma_b_per_lambda = gamma;
        cfg.system.n_init = 0.3;
        cfg.evolve.t_final_inverse_lambda = 2.0;
        cfg.evolve.samples = 4;
        cfg
    }

    #[test]
    fn run_writes_csv_plot_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_scenario(&tiny(0.01), &RunOptions::in_dir(dir.path())).unwrap();
        assert_eq!(out.files.len(), 3);
        for f in &out.files {
            assert!(f.exists(), "{f:?}");
        }
        let csv = std::fs::read_to_string(dir.path().join("tiny.csv")).unwrap();
        assert_eq!(csv.lines().count(), 6);
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("tiny.manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["kind"], "run");
        assert_eq!(manifest["config"]["space"]["dim_a"], 4);
        assert!(manifest["integrator"]["accepted_steps"].as_u64().unwrap() > 0);
        assert!(manifest["version"].as_str().unwrap().starts_with(env!("CARGO_PKG_VERSION")));
    }

    #[test]
    fn small_truncation_is_flagged() {
        let out = run_scenario(&tiny(0.01), &RunOptions::default()).unwrap();
        assert!(out.files.is_empty());
        assert!(out.manifest.truncation.max_leakage > LEAKAGE_LIMIT);
        assert!(out.manifest.is_truncation_suspect());
    }

    #[test]
    fn plot_override() {
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions { plot: Some(false), ..RunOptions::in_dir(dir.path()) };
        let out = run_scenario(&tiny(0.0), &opts).unwrap();
        assert!(!dir.path().join("tiny.svg").exists());
        assert_eq!(out.files.len(), 2);
    }

    #[test]
    fn steady_writes_single_row() {
        let dir = tempfile::tempdir().unwrap();
        let out = steady_scenario(&tiny(0.01), &RunOptions::in_dir(dir.path())).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("tiny-steady.csv")).unwrap();
        assert_eq!(csv.lines().count(), 2);
        assert!((out.sample.atom_populations.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn validation_requires_trap_frequencies() {
        match validate_command(&tiny(0.01), &RunOptions::default()) {
            Err(Error::Config(v)) => {
                assert_eq!(v.len(), 2);
                assert!(v[0].contains("full_model.trap_nu_x_per_lambda"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config(vec![])), 1);
        assert_eq!(exit_code(&Error::Integrity("x".into())), 2);
        assert_eq!(exit_code(&Error::NonUniqueSteadyState { null_dim: 2 }), 2);
        assert_eq!(exit_code(&Error::Stiffness { t: 0.0, step: 0.0 }), 2);
    }

    #[test]
    fn builtin_names_resolve_without_files() {
        assert_eq!(load_scenario("ideal-gamma-0").unwrap().name, "ideal-gamma-0");
        assert!(matches!(load_scenario("no-such-scenario"), Err(Error::Io(_))));
    }
}
