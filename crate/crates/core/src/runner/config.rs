//! Scenario files.
//!
//! Rates and frequencies are given in units of the main sideband coupling λ
//! (keys ending in `_per_lambda`), times in units of 1/λ (keys ending in
//! `_inverse_lambda`) and angles in radians (`_rad`).

use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dynamics::EvolveConfig;
use crate::error::{Error, Result};
use crate::hilbert::{SpaceSpec, DEFAULT_FOCK_DIM};
use crate::model::{FullModelParams, SystemParams};
use crate::observables::DuanConfig;
use crate::states::{solve_squeeze_params, DriveSet, SqueezeParams};

/// Tolerance used to check that explicit drives admit a squeeze solution.
pub const DRIVE_CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub system: SystemSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub squeeze: Option<SqueezeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drives: Option<DrivesSection>,
    #[serde(default)]
    pub space: SpaceSection,
    pub evolve: EvolveSection,
    #[serde(default)]
    pub observables: ObservablesSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_model: Option<FullModelSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rwa: Option<RwaSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub gamma_1_per_lambda: f64,
    pub gamma_2_per_lambda: f64,
    pub gamma_a_per_lambda: f64,
    pub gamma_b_per_lambda: f64,
    /// Mean quanta of the motional reservoir.
    pub n_th: f64,
    /// Mean quanta of the initial thermal motional state.
    pub n_init: f64,
}

/// Target squeeze; the drives become `λ_1x = λ_2y = coupling`,
/// `λ_1y = λ_2x = coupling · tanh(r) e^{iφ}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqueezeSection {
    pub r: f64,
    #[serde(default)]
    pub phi_rad: f64,
    #[serde(default = "one")]
    pub coupling_per_lambda: f64,
}

/// Explicit couplings as `[re, im]` pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DrivesSection {
    pub lambda_1x_per_lambda: [f64; 2],
    pub lambda_1y_per_lambda: [f64; 2],
    pub lambda_2x_per_lambda: [f64; 2],
    pub lambda_2y_per_lambda: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSection {
    #[serde(default = "default_dim")]
    pub dim_a: usize,
    #[serde(default = "default_dim")]
    pub dim_b: usize,
}

impl Default for SpaceSection {
    fn default() -> Self {
        Self { dim_a: DEFAULT_FOCK_DIM, dim_b: DEFAULT_FOCK_DIM }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSection {
    pub t_final_inverse_lambda: f64,
    /// Number of sampling intervals; samples are taken at both ends.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step_inverse_lambda: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservablesSection {
    #[serde(default = "one")]
    pub duan_epsilon: f64,
    #[serde(default)]
    pub duan_phi_rad: f64,
}

impl Default for ObservablesSection {
    fn default() -> Self {
        Self { duan_epsilon: 1.0, duan_phi_rad: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub plot: bool,
    /// CSV columns drawn in the SVG plot.
    #[serde(default = "default_plot_series")]
    pub plot_series: Vec<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { plot: false, plot_series: default_plot_series() }
    }
}

/// Parameters of the interaction-picture model before the rotating-wave
/// approximation. Detunings default to the sideband resonances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FullModelSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trap_nu_x_per_lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trap_nu_y_per_lambda: Option<f64>,
    #[serde(default = "default_lamb_dicke")]
    pub lamb_dicke: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detunings_per_lambda: Option<[f64; 4]>,
}

/// RWA check settings: the ratios ν/|λ_1x| to test and the largest
/// accepted trace distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RwaSection {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ratios: Vec<f64>,
    #[serde(default = "default_rwa_bound")]
    pub bound: f64,
}

/// Default bound on the trace distance between sideband and full-model
/// reduced motional states.
pub const DEFAULT_RWA_BOUND: f64 = 0.05;

fn one() -> f64 {
    1.0
}
fn default_dim() -> usize {
    DEFAULT_FOCK_DIM
}
fn default_samples() -> usize {
    200
}
fn default_rel_tol() -> f64 {
    1e-8
}
fn default_abs_tol() -> f64 {
    1e-10
}
fn default_lamb_dicke() -> f64 {
    crate::dynamics::DEFAULT_LAMB_DICKE
}
fn default_rwa_bound() -> f64 {
    DEFAULT_RWA_BOUND
}
fn default_plot_series() -> Vec<String> {
    vec!["mean_quanta_a".into(), "duan_variance".into()]
}

/// A scenario with every section checked and converted.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub params: SystemParams,
    /// Squeeze the drives engineer; the vacuum when all drives vanish.
    pub target: SqueezeParams,
    pub space: SpaceSpec,
    pub evolve: EvolveConfig,
    pub duan: DuanConfig,
    pub plot: bool,
    pub plot_series: Vec<String>,
}

fn check(out: &mut Vec<String>, key: &str, v: f64, ok: bool, rule: &str) {
    if !(ok && v.is_finite()) {
        out.push(format!("{key} = {v}: {rule}"));
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(vec![e.message().trim().to_string()]))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(vec![format!("{}: {}", path.display(), e.message().trim())]))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    fn drives(&self) -> Option<DriveSet> {
        let c = |p: [f64; 2]| C64::new(p[0], p[1]);
        match (&self.squeeze, &self.drives) {
            (Some(s), None) => SqueezeParams::new(s.r, s.phi_rad).ok().map(|p| DriveSet::for_squeeze(s.coupling_per_lambda, &p)),
            (None, Some(d)) => Some(DriveSet::new(
                c(d.lambda_1x_per_lambda),
                c(d.lambda_1y_per_lambda),
                c(d.lambda_2x_per_lambda),
                c(d.lambda_2y_per_lambda),
            )),
            _ => None,
        }
    }

    fn full_model(&self) -> Option<FullModelParams> {
        let f = self.full_model.as_ref()?;
        let (nx, ny) = (f.trap_nu_x_per_lambda?, f.trap_nu_y_per_lambda?);
        let mut p = FullModelParams::resonant(nx, ny, f.lamb_dicke);
        if let Some(d) = f.detunings_per_lambda {
            p.detunings = d;
        }
        Some(p)
    }

    /// Checks every field, reporting all violations at once.
    pub fn resolve(&self) -> Result<Scenario> {
        let mut errs = Vec::new();
        if self.name.trim().is_empty() {
            errs.push("name must not be empty".into());
        }
        let s = &self.system;
        for (key, v) in [
            ("system.gamma_1_per_lambda", s.gamma_1_per_lambda),
            ("system.gamma_2_per_lambda", s.gamma_2_per_lambda),
            ("system.gamma_a_per_lambda", s.gamma_a_per_lambda),
            ("system.gamma_b_per_lambda", s.gamma_b_per_lambda),
            ("system.n_th", s.n_th),
            ("system.n_init", s.n_init),
        ] {
            check(&mut errs, key, v, v >= 0.0, "must be finite and >= 0");
        }

        match (&self.squeeze, &self.drives) {
            (Some(_), Some(_)) => errs.push("give exactly one of [squeeze] and [drives], not both".into()),
            (None, None) => errs.push("one of [squeeze] or [drives] is required".into()),
            (Some(q), None) => {
                check(&mut errs, "squeeze.r", q.r, q.r >= 0.0, "must be finite and >= 0");
                check(&mut errs, "squeeze.phi_rad", q.phi_rad, true, "must be finite");
                check(&mut errs, "squeeze.coupling_per_lambda", q.coupling_per_lambda, q.coupling_per_lambda > 0.0, "must be finite and > 0");
            }
            (None, Some(d)) => {
                for (key, p) in [
                    ("drives.lambda_1x_per_lambda", d.lambda_1x_per_lambda),
                    ("drives.lambda_1y_per_lambda", d.lambda_1y_per_lambda),
                    ("drives.lambda_2x_per_lambda", d.lambda_2x_per_lambda),
                    ("drives.lambda_2y_per_lambda", d.lambda_2y_per_lambda),
                ] {
                    if !(p[0].is_finite() && p[1].is_finite()) {
                        errs.push(format!("{key} = {p:?}: must be finite"));
                    }
                }
            }
        }
        let drives = self.drives();
        let target = match (&self.squeeze, drives) {
            (Some(q), _) => SqueezeParams::new(q.r, q.phi_rad).ok(),
            (None, Some(d)) if d.scale() == 0.0 => Some(SqueezeParams::vacuum()),
            (None, Some(d)) => match solve_squeeze_params(&d, DRIVE_CONSISTENCY_TOL) {
                Ok(p) => Some(p),
                Err(e) => {
                    errs.push(format!("drives: {e}"));
                    None
                }
            },
            _ => None,
        };

        let sp = &self.space;
        for (key, v) in [("space.dim_a", sp.dim_a), ("space.dim_b", sp.dim_b)] {
            if v < 2 {
                errs.push(format!("{key} = {v}: must be >= 2"));
            }
        }

        let e = &self.evolve;
        check(&mut errs, "evolve.t_final_inverse_lambda", e.t_final_inverse_lambda, e.t_final_inverse_lambda > 0.0, "must be finite and > 0");
        if e.samples == 0 {
            errs.push("evolve.samples = 0: must be >= 1".into());
        }
        check(&mut errs, "evolve.rel_tol", e.rel_tol, e.rel_tol > 0.0, "must be finite and > 0");
        check(&mut errs, "evolve.abs_tol", e.abs_tol, e.abs_tol > 0.0, "must be finite and > 0");
        if let Some(h) = e.max_step_inverse_lambda {
            check(&mut errs, "evolve.max_step_inverse_lambda", h, h > 0.0, "must be finite and > 0");
        }

        let o = &self.observables;
        check(&mut errs, "observables.duan_epsilon", o.duan_epsilon, o.duan_epsilon > 0.0, "must be finite and > 0");
        check(&mut errs, "observables.duan_phi_rad", o.duan_phi_rad, true, "must be finite");
        for name in &self.output.plot_series {
            if !super::output::CSV_COLUMNS[1..].contains(&name.as_str()) {
                errs.push(format!("output.plot_series: unknown series {name:?}"));
            }
        }

        if let Some(f) = &self.full_model {
            for (key, v) in [("full_model.trap_nu_x_per_lambda", f.trap_nu_x_per_lambda), ("full_model.trap_nu_y_per_lambda", f.trap_nu_y_per_lambda)] {
                if let Some(v) = v {
                    check(&mut errs, key, v, v > 0.0, "must be finite and > 0");
                }
            }
            check(&mut errs, "full_model.lamb_dicke", f.lamb_dicke, f.lamb_dicke > 0.0 && f.lamb_dicke < 1.0, "must lie in (0, 1)");
            if let (Some(p), Some(_)) = (self.full_model(), f.detunings_per_lambda) {
                errs.extend(p.violations().into_iter().map(|m| format!("full_model: {m}")));
            }
        }
        if let Some(r) = &self.rwa {
            for &x in &r.ratios {
                check(&mut errs, "rwa.ratios", x, x > 0.0, "every ratio must be finite and > 0");
            }
            check(&mut errs, "rwa.bound", r.bound, r.bound > 0.0, "must be finite and > 0");
        }

        if !errs.is_empty() {
            return Err(Error::Config(errs));
        }
        let drives = drives.expect("checked above");
        let params = SystemParams {
            drives,
            gamma_1: s.gamma_1_per_lambda,
            gamma_2: s.gamma_2_per_lambda,
            gamma_a: s.gamma_a_per_lambda,
            gamma_b: s.gamma_b_per_lambda,
            n_th: s.n_th,
            n_init: s.n_init,
            full: self.full_model(),
        };
        let mut evolve = EvolveConfig::uniform(e.t_final_inverse_lambda, e.samples);
        evolve.rel_tol = e.rel_tol;
        evolve.abs_tol = e.abs_tol;
        evolve.max_step = e.max_step_inverse_lambda.unwrap_or(f64::INFINITY);
        Ok(Scenario {
            name: self.name.clone(),
            params,
            target: target.expect("checked above"),
            space: SpaceSpec::new(sp.dim_a, sp.dim_b)?,
            evolve,
            duan: DuanConfig::new(o.duan_epsilon)?.with_phi(o.duan_phi_rad),
            plot: self.output.plot,
            plot_series: self.output.plot_series.clone(),
        })
    }

    /// Full-model parameters and RWA settings needed by the RWA check,
    /// listing every missing field.
    pub fn rwa_settings(&self) -> Result<(FullModelParams, Vec<f64>, f64)> {
        let mut errs = Vec::new();
        let f = self.full_model.as_ref();
        if f.and_then(|f| f.trap_nu_x_per_lambda).is_none() {
            errs.push("full_model.trap_nu_x_per_lambda is required for the RWA check".into());
        }
        if f.and_then(|f| f.trap_nu_y_per_lambda).is_none() {
            errs.push("full_model.trap_nu_y_per_lambda is required for the RWA check".into());
        }
        if !errs.is_empty() {
            return Err(Error::Config(errs));
        }
        let full = self.full_model().expect("both frequencies present");
        let coupling = self.drives().map_or(0.0, |d| d.lambda_1x.norm());
        let coupling = if coupling > 0.0 { coupling } else { 1.0 };
        let (ratios, bound) = match &self.rwa {
            Some(r) if !r.ratios.is_empty() => (r.ratios.clone(), r.bound),
            Some(r) => (vec![full.trap_nu_x / coupling], r.bound),
            None => (vec![full.trap_nu_x / coupling], DEFAULT_RWA_BOUND),
        };
        Ok((full, ratios, bound))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
name = "t"
[system]
gamma_1_per_lambda = 10.0
gamma_2_per_lambda = 10.0
gamma_a_per_lambda = 0.001
gamma_b_per_lambda = 0.001
n_th = 0.5
n_init = 2.0
[squeeze]
r = 1.0
[evolve]
t_final_inverse_lambda = 10.0
"#;

    #[test]
    fn minimal_file_resolves_with_defaults() {
        let sc = ScenarioConfig::from_toml_str(BASE).unwrap().resolve().unwrap();
        assert_eq!(sc.space, SpaceSpec::new(18, 18).unwrap());
        assert_eq!(sc.evolve.sample_times.len(), 201);
        assert_eq!(sc.params.drives, DriveSet::for_squeeze(1.0, &SqueezeParams::new(1.0, 0.0).unwrap()));
        assert_eq!(sc.duan.threshold(), 2.0);
        assert!(sc.params.full.is_none());
    }

    #[test]
    fn every_violation_is_listed() {
        let text = BASE.replace("gamma_a_per_lambda = 0.001", "gamma_a_per_lambda = -1.0").replace("n_th = 0.5", "n_th = -0.5")
            + "[space]\ndim_a = 1\n";
        match ScenarioConfig::from_toml_str(&text).unwrap().resolve() {
            Err(Error::Config(v)) => {
                assert_eq!(v.len(), 3, "{v:?}");
                assert!(v[0].starts_with("system.gamma_a_per_lambda"));
                assert!(v[1].starts_with("system.n_th"));
                assert!(v[2].starts_with("space.dim_a"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn squeeze_and_drives_are_exclusive() {
        let text = format!(
            "{BASE}[drives]\nlambda_1x_per_lambda = [1.0, 0.0]\nlambda_1y_per_lambda = [0.5, 0.0]\nlambda_2x_per_lambda = [0.5, 0.0]\nlambda_2y_per_lambda = [1.0, 0.0]\n"
        );
        let err = ScenarioConfig::from_toml_str(&text).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("exactly one"), "{err}");
        let none = BASE.replace("[squeeze]\nr = 1.0\n", "");
        let err = ScenarioConfig::from_toml_str(&none).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("is required"), "{err}");
    }

    #[test]
    fn explicit_drives_derive_the_target() {
        let text = BASE.replace(
            "[squeeze]\nr = 1.0\n",
            "[drives]\nlambda_1x_per_lambda = [2.0, 0.0]\nlambda_1y_per_lambda = [0.0, 1.0]\nlambda_2x_per_lambda = [0.0, 1.0]\nlambda_2y_per_lambda = [2.0, 0.0]\n",
        );
        let sc = ScenarioConfig::from_toml_str(&text).unwrap().resolve().unwrap();
        assert!((sc.target.r() - 0.5f64.atanh()).abs() < 1e-12);
        assert!((sc.target.phi() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn inconsistent_drives_are_rejected() {
        let text = BASE.replace(
            "[squeeze]\nr = 1.0\n",
            "[drives]\nlambda_1x_per_lambda = [1.0, 0.0]\nlambda_1y_per_lambda = [0.5, 0.0]\nlambda_2x_per_lambda = [0.3, 0.0]\nlambda_2y_per_lambda = [1.0, 0.0]\n",
        );
        let err = ScenarioConfig::from_toml_str(&text).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("drives:"), "{err}");
    }

    #[test]
    fn zero_drives_target_the_vacuum() {
        let text = BASE.replace(
            "[squeeze]\nr = 1.0\n",
            "[drives]\nlambda_1x_per_lambda = [0.0, 0.0]\nlambda_1y_per_lambda = [0.0, 0.0]\nlambda_2x_per_lambda = [0.0, 0.0]\nlambda_2y_per_lambda = [0.0, 0.0]\n",
        );
        let sc = ScenarioConfig::from_toml_str(&text).unwrap().resolve().unwrap();
        assert_eq!(sc.target, SqueezeParams::vacuum());
    }

    #[test]
    fn unknown_keys_and_missing_units_are_errors() {
        let err = ScenarioConfig::from_toml_str(&BASE.replace("n_th", "n_thermal")).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
        let err = ScenarioConfig::from_toml_str(&BASE.replace("t_final_inverse_lambda", "t_final")).unwrap_err();
        assert!(err.to_string().contains("t_final"), "{err}");
    }

    #[test]
    fn rwa_settings_name_missing_frequencies() {
        let cfg = ScenarioConfig::from_toml_str(&format!("{BASE}[full_model]\ntrap_nu_y_per_lambda = 30.0\n")).unwrap();
        cfg.resolve().unwrap();
        match cfg.rwa_settings() {
            Err(Error::Config(v)) => assert_eq!(v, vec!["full_model.trap_nu_x_per_lambda is required for the RWA check"]),
            other => panic!("{other:?}"),
        }
        let cfg = ScenarioConfig::from_toml_str(&format!(
            "{BASE}[full_model]\ntrap_nu_x_per_lambda = 30.0\ntrap_nu_y_per_lambda = 30.0\n"
        ))
        .unwrap();
        let (full, ratios, bound) = cfg.rwa_settings().unwrap();
        assert_eq!(ratios, vec![30.0]);
        assert_eq!(bound, DEFAULT_RWA_BOUND);
        assert_eq!(full.detunings, [-30.0, 30.0, 30.0, -30.0]);
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = ScenarioConfig::from_toml_str(BASE).unwrap();
        assert_eq!(ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
    }
}
