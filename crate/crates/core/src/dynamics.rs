//! Master-equation time evolution, steady states and relaxation fits.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{DensityState, SpaceSpec};
use crate::integrate::{integrate, IntegratorStats, Tolerances};
use crate::linalg;
use crate::model::{master_equation, FullModelParams, SystemParams, TimeDependentGenerator};
use crate::observables::{ObservableSet, Sample};
use crate::sparse::CsrMatrix;
use crate::superop::{ReducedGenerator, Superoperator};

/// Allowed deviation of the trace from one at any sample.
pub const TRACE_DRIFT_TOL: f64 = 1e-6;

/// Allowed `max |ρ − ρ†|` at a sample before symmetrization.
pub const HERMITICITY_DRIFT_TOL: f64 = 1e-8;

/// Reduced systems up to this size are solved by dense SVD.
pub const DENSE_STEADY_LIMIT: usize = 1500;

/// Largest accepted `max |L vec(ρ_ss)|`.
pub const STEADY_RESIDUAL_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub t_final: f64,
    pub sample_times: Vec<f64>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
}

impl EvolveConfig {
    /// `samples + 1` equally spaced sample times from 0 to `t_final`.
    pub fn uniform(t_final: f64, samples: usize) -> Self {
        let n = samples.max(1);
        Self {
            t_final,
            sample_times: (0..=n).map(|k| t_final * k as f64 / n as f64).collect(),
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            max_step: f64::INFINITY,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            out.push(format!("t_final = {} must be finite and > 0", self.t_final));
        }
        if self.sample_times.is_empty() {
            out.push("sample_times must not be empty".into());
        }
        if self.sample_times.windows(2).any(|w| !(w[0] <= w[1])) {
            out.push("sample_times must be sorted".into());
        }
        if self.sample_times.iter().any(|&t| !(0.0..=self.t_final).contains(&t)) {
            out.push("sample_times must lie in [0, t_final]".into());
        }
        for (name, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol), ("max_step", self.max_step)] {
            if !(v > 0.0) {
                out.push(format!("{name} = {v} must be > 0"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    fn tolerances(&self) -> Tolerances {
        Tolerances { rel: self.rel_tol, abs: self.abs_tol, max_step: self.max_step }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryMetadata {
    pub dim_a: usize,
    pub dim_b: usize,
    /// Length of the evolved vector (reduced for static generators).
    pub evolved_dim: usize,
    pub integrator: IntegratorStats,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub mean_quanta_a: Vec<f64>,
    pub mean_quanta_b: Vec<f64>,
    pub duan_variance: Vec<f64>,
    pub tmvs_fidelity: Vec<f64>,
    pub atom_populations: Vec<[f64; 3]>,
    pub truncation_leakage: Vec<f64>,
    pub params_snapshot: Option<SystemParams>,
    pub metadata: TrajectoryMetadata,
    #[serde(skip)]
    pub final_state: Option<DensityState>,
}

impl TrajectoryRecord {
    fn new(space: SpaceSpec, evolved_dim: usize) -> Self {
        Self {
            times: Vec::new(),
            mean_quanta_a: Vec::new(),
            mean_quanta_b: Vec::new(),
            duan_variance: Vec::new(),
            tmvs_fidelity: Vec::new(),
            atom_populations: Vec::new(),
            truncation_leakage: Vec::new(),
            params_snapshot: None,
            metadata: TrajectoryMetadata {
                dim_a: space.dim_a(),
                dim_b: space.dim_b(),
                evolved_dim,
                integrator: IntegratorStats::default(),
            },
            final_state: None,
        }
    }

    fn push(&mut self, t: f64, s: Sample) {
        self.times.push(t);
        self.mean_quanta_a.push(s.mean_quanta_a);
        self.mean_quanta_b.push(s.mean_quanta_b);
        self.duan_variance.push(s.duan_variance);
        self.tmvs_fidelity.push(s.tmvs_fidelity);
        self.atom_populations.push(s.atom_populations);
        self.truncation_leakage.push(s.leakage);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_leakage(&self) -> f64 {
        self.truncation_leakage.iter().copied().fold(0.0, f64::max)
    }

    /// Series by CSV column name.
    pub fn series(&self, name: &str) -> Option<Vec<f64>> {
        let pop = |k: usize| self.atom_populations.iter().map(|p| p[k]).collect();
        Some(match name {
            "mean_quanta_a" => self.mean_quanta_a.clone(),
            "mean_quanta_b" => self.mean_quanta_b.clone(),
            "duan_variance" => self.duan_variance.clone(),
            "tmvs_fidelity" => self.tmvs_fidelity.clone(),
            "pop_atom_0" => pop(0),
            "pop_atom_1" => pop(1),
            "pop_atom_2" => pop(2),
            "leakage" => self.truncation_leakage.clone(),
            _ => return None,
        })
    }
}

/// Generator driving [`evolve`].
#[derive(Clone, Copy, Debug)]
pub enum Generator<'a> {
    Static(&'a Superoperator),
    TimeDependent(&'a TimeDependentGenerator),
}

impl Generator<'_> {
    fn space(&self) -> SpaceSpec {
        match self {
            Generator::Static(l) => l.space(),
            Generator::TimeDependent(g) => g.space(),
        }
    }
}

/// Trace and Hermiticity checks at a sample; returns the symmetrized state.
fn checked_state(space: SpaceSpec, t: f64, mut m: Array2<C64>) -> Result<DensityState> {
    let tr = linalg::trace(&m);
    if !((tr.re - 1.0).abs() <= TRACE_DRIFT_TOL && tr.im.abs() <= TRACE_DRIFT_TOL) {
        return Err(Error::Integrity(format!("trace {tr} drifted from 1 at t = {t}")));
    }
    let adj = linalg::adjoint(&m);
    let herm = linalg::max_abs(&(&m - &adj));
    if !(herm <= HERMITICITY_DRIFT_TOL) {
        return Err(Error::Integrity(format!("Hermiticity error {herm:.3e} at t = {t}")));
    }
    m = (&m + &adj).mapv(|z| z * 0.5);
    DensityState::from_matrix_unchecked(space, m)
}

/// Integrates the master equation from `rho0` at `t = 0`, sampling the
/// observables at `cfg.sample_times`.
///
/// Static generators are evolved on the invariant subspace reachable from
/// the support of `rho0`, which is exact.
pub fn evolve(
    rho0: &DensityState,
    generator: Generator<'_>,
    cfg: &EvolveConfig,
    observables: &ObservableSet,
) -> Result<TrajectoryRecord> {
    let (mut record, mut states) = evolve_sampled(rho0, generator, cfg, observables, false)?;
    record.final_state = states.pop();
    Ok(record)
}

/// [`evolve`], also returning every sampled state when `keep_all` is set
/// (otherwise only the last one).
fn evolve_sampled(
    rho0: &DensityState,
    generator: Generator<'_>,
    cfg: &EvolveConfig,
    observables: &ObservableSet,
    keep_all: bool,
) -> Result<(TrajectoryRecord, Vec<DensityState>)> {
    cfg.validate()?;
    rho0.validate()?;
    let space = rho0.space();
    if generator.space() != space || observables.space() != space {
        return Err(Error::InvalidDimension("state, generator and observables must share a space".into()));
    }
    let d = space.total_dim();
    let mut states = Vec::new();
    let mut sink = |record: &mut TrajectoryRecord, t: f64, m: Array2<C64>| -> Result<()> {
        let state = checked_state(space, t, m)?;
        record.push(t, observables.measure(&state)?);
        if !keep_all {
            states.clear();
        }
        states.push(state);
        Ok(())
    };

    let record = match generator {
        Generator::Static(l) => {
            let m0 = rho0.matrix();
            let reduced = l.restrict((0..d * d).filter(|&p| m0[[p % d, p / d]] != C64::new(0.0, 0.0)));
            let (x0, _) = reduced.gather(m0);
            let mut record = TrajectoryRecord::new(space, reduced.len());
            let matrix = reduced.matrix();
            let (_, stats) = integrate(
                |_, x, dx| matrix.matvec(x, dx),
                0.0,
                x0,
                &cfg.sample_times,
                cfg.tolerances(),
                |_, t, x| sink(&mut record, t, reduced.scatter(x)),
            )?;
            record.metadata.integrator = stats;
            record
        }
        Generator::TimeDependent(g) => {
            let mut record = TrajectoryRecord::new(space, d * d);
            let to_matrix = |x: &[C64]| Array2::from_shape_vec((d, d), x.to_vec()).expect("length d²");
            let (_, stats) = integrate(
                |t, x, dx| {
                    let out = g.apply(t, &to_matrix(x));
                    dx.copy_from_slice(out.as_slice().expect("standard layout"));
                },
                0.0,
                rho0.matrix().iter().copied().collect(),
                &cfg.sample_times,
                cfg.tolerances(),
                |_, t, x| sink(&mut record, t, to_matrix(x)),
            )?;
            record.metadata.integrator = stats;
            record
        }
    };
    Ok((record, states))
}

/// Default initial state: both modes thermal at `n_init`, atom in `|0⟩`.
pub fn initial_state(params: &SystemParams, space: SpaceSpec) -> Result<DensityState> {
    DensityState::thermal_ground(space, params.n_init)
}

/// Unique null vector of a static generator as a density matrix.
///
/// The generator is restricted to the subspace reachable from the diagonal
/// of ρ. Small restrictions are solved by dense SVD; larger ones by a sparse
/// LU solve of the generator with a trace row added, `(L + e_k tᵀ) x = e_k`,
/// which is nonsingular exactly when the null space is one-dimensional.
pub fn steady_state(generator: &Superoperator) -> Result<DensityState> {
    let space = generator.space();
    let d = space.total_dim();
    let reduced = generator.restrict((0..d).map(|i| i + i * d));
    if reduced.diagonal_components() > 1 {
        return Err(Error::NonUniqueSteadyState { null_dim: reduced.diagonal_components() });
    }
    let diag = reduced.diagonal_positions();
    let x = if reduced.len() <= DENSE_STEADY_LIMIT {
        dense_null_vector(&reduced)?
    } else {
        sparse_null_vector(&reduced, &diag)?
    };

    let trace: C64 = diag.iter().map(|&p| x[p]).sum();
    if !(trace.norm() > 0.0) {
        return Err(Error::Integrity("steady-state null vector has zero trace".into()));
    }
    let x: Vec<C64> = x.iter().map(|z| z / trace).collect();
    let mut r = vec![C64::new(0.0, 0.0); x.len()];
    reduced.matrix().matvec(&x, &mut r);
    let residual = r.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !(residual < STEADY_RESIDUAL_TOL) {
        return Err(Error::Integrity(format!("steady-state residual {residual:.3e}")));
    }

    let m = reduced.scatter(&x);
    let m = (&m + &linalg::adjoint(&m)).mapv(|z| z * 0.5);
    let tr = linalg::trace(&m);
    let state = DensityState::from_matrix_unchecked(space, m.mapv(|z| z / tr))?;
    let min = state.min_eigenvalue()?;
    if min < DensityState::EIGEN_FLOOR {
        return Err(Error::Integrity(format!("steady state has eigenvalue {min:.3e}")));
    }
    Ok(state)
}

fn dense_null_vector(reduced: &ReducedGenerator) -> Result<Vec<C64>> {
    let (null_dim, v) = linalg::null_space(&reduced.matrix().to_dense(), 1e-10)?;
    if null_dim != 1 {
        return Err(Error::NonUniqueSteadyState { null_dim });
    }
    Ok(v.to_vec())
}

fn sparse_null_vector(reduced: &ReducedGenerator, diag: &[usize]) -> Result<Vec<C64>> {
    let n = reduced.len();
    // Anchor the trace row on the diagonal entry with the largest generator
    // coupling, which keeps the bordered matrix well scaled.
    let k = diag
        .iter()
        .copied()
        .max_by(|&p, &q| reduced.matrix().get(p, p).norm().total_cmp(&reduced.matrix().get(q, q).norm()))
        .ok_or_else(|| Error::Integrity("generator has no diagonal entries".into()))?;
    let scale = reduced.matrix().max_abs().max(1.0);
    let bordered = reduced
        .matrix()
        .add(&CsrMatrix::from_triplets(n, n, diag.iter().map(|&p| (k, p, C64::new(scale, 0.0)))));
    let mut rhs = vec![C64::new(0.0, 0.0); n];
    rhs[k] = C64::new(scale, 0.0);
    let x = linalg::sparse_solve(&bordered, &rhs)?;
    // A singular bordered matrix (degenerate null space) shows up as
    // non-finite or non-physical entries of the solution.
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite() || z.norm() > 1.0 + 1e-6) {
        return Err(Error::NonUniqueSteadyState { null_dim: 2 });
    }
    Ok(x)
}

/// Exponential rate of `|obs(t) − obs(∞)|` by least squares on its logarithm.
///
/// The fit window starts once the distance has dropped below a third of its
/// maximum (skipping the initial transient) and ends where it falls below
/// `1e−3` of the maximum or `1e−9` absolute, whichever is larger. With
/// `asymptote = None` the last sample stands in for `obs(∞)`.
pub fn fit_relaxation_rate(times: &[f64], values: &[f64], asymptote: Option<f64>) -> Result<f64> {
    if times.len() != values.len() || times.len() < 3 {
        return Err(Error::InvalidArgument("need at least three matching samples".into()));
    }
    let target = asymptote.unwrap_or(*values.last().expect("non-empty"));
    let dist: Vec<f64> = values.iter().map(|v| (v - target).abs()).collect();
    let peak = dist.iter().copied().fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::FitFailure { reason: "observable is constant".into(), residual: 0.0 });
    }
    let start = dist.iter().position(|&x| x <= peak / 3.0).unwrap_or(dist.len());
    let floor = (peak * 1e-3).max(1e-9);
    let window: Vec<(f64, f64)> = (start..dist.len())
        .take_while(|&i| dist[i] >= floor)
        .map(|i| (times[i], dist[i].ln()))
        .collect();
    let span = window.last().map_or(0.0, |&(_, y)| (peak.ln() - y) / std::f64::consts::LN_10);
    if window.len() < 3 || span < 2.0 {
        return Err(Error::FitFailure {
            reason: format!("distance to the asymptote spans only {span:.2} decades in the fit window"),
            residual: f64::NAN,
        });
    }
    let n = window.len() as f64;
    let (st, sy) = window.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + t, b + y));
    let (mt, my) = (st / n, sy / n);
    let (sxy, sxx) = window.iter().fold((0.0, 0.0), |(a, b), (t, y)| (a + (t - mt) * (y - my), b + (t - mt).powi(2)));
    let slope = sxy / sxx;
    let rms = (window.iter().map(|(t, y)| (y - (my + slope * (t - mt))).powi(2)).sum::<f64>() / n).sqrt();
    if rms > 0.25 || !(slope < 0.0) {
        return Err(Error::FitFailure { reason: "tail is not a single decaying exponential".into(), residual: rms });
    }
    Ok(-slope)
}

/// Maximum deviations between the sideband model and the full
/// interaction-picture model, over all sample times.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RwaReport {
    pub nu_over_coupling: f64,
    pub max_trace_distance: f64,
    pub max_dev_mean_quanta_a: f64,
    pub max_dev_mean_quanta_b: f64,
    pub max_dev_duan_variance: f64,
    pub max_dev_tmvs_fidelity: f64,
}

/// Default Lamb–Dicke parameter when `params` carries no full-model fields.
pub const DEFAULT_LAMB_DICKE: f64 = 0.1;

/// Evolves the same initial state under the sideband model and the full
/// model with trap frequencies `ν = nu_over_coupling · |λ_1x|` and resonant
/// detunings, both with identical dissipators.
pub fn validate_rwa(
    params: &SystemParams,
    cfg: &EvolveConfig,
    nu_over_coupling: f64,
    space: SpaceSpec,
    observables: &ObservableSet,
) -> Result<RwaReport> {
    if !(nu_over_coupling > 0.0) {
        return Err(Error::InvalidArgument(format!("nu/coupling ratio must be > 0, got {nu_over_coupling}")));
    }
    // With no drive the ratio is taken against the unit of frequency.
    let coupling = match params.drives.lambda_1x.norm() {
        c if c > 0.0 => c,
        _ => 1.0,
    };
    let nu = nu_over_coupling * coupling;
    let lamb_dicke = params.full.map_or([DEFAULT_LAMB_DICKE; 4], |f| f.lamb_dicke);
    let mut full = params.clone();
    full.full = Some(FullModelParams { lamb_dicke, ..FullModelParams::resonant(nu, nu, lamb_dicke[0]) });
    let rho0 = initial_state(params, space)?;

    let static_l = master_equation(params, space)?;
    let (sideband, side_states) = evolve_sampled(&rho0, Generator::Static(&static_l), cfg, observables, true)?;

    let td = TimeDependentGenerator::new(&full, space)?;
    let mut td_cfg = cfg.clone();
    td_cfg.max_step = cfg.max_step.min(td.model().fastest_period() / 20.0);
    let (exact, states) = evolve_sampled(&rho0, Generator::TimeDependent(&td), &td_cfg, observables, true)?;

    let mut max_td = 0.0f64;
    for (x, y) in states.iter().zip(&side_states) {
        max_td = max_td.max(linalg::trace_distance(&x.modes(), &y.modes())?);
    }
    let dev = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(RwaReport {
        nu_over_coupling,
        max_trace_distance: max_td,
        max_dev_mean_quanta_a: dev(&exact.mean_quanta_a, &sideband.mean_quanta_a),
        max_dev_mean_quanta_b: dev(&exact.mean_quanta_b, &sideband.mean_quanta_b),
        max_dev_duan_variance: dev(&exact.duan_variance, &sideband.duan_variance),
        max_dev_tmvs_fidelity: dev(&exact.tmvs_fidelity, &sideband.tmvs_fidelity),
    })
}
