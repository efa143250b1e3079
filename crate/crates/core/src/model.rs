//! Hamiltonians and Liouvillians of the driven three-level ion.
//!
//! Jump operators and rates follow `ρ̇ = −i[H, ρ] + Σ_k D[c_k]ρ` with
//! `D[c]ρ = (rate/2)(2cρc† − c†cρ − ρc†c)`. All frequencies are in units of
//! the main sideband coupling `λ`.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{sigma, Ladder, Operator, SpaceSpec};
use crate::sparse::CsrMatrix;
use crate::states::{squeeze_residuals, DriveSet, SqueezeParams};
use crate::superop::Superoperator;

/// Tolerance on the full-model resonance conditions.
pub const RESONANCE_TOL: f64 = 1e-12;

/// Largest `‖H − H†‖` accepted when building a generator.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Detunings, trap frequencies and Lamb–Dicke parameters needed by the
/// interaction-picture model before the rotating-wave approximation.
/// Arrays are ordered `[1x, 1y, 2x, 2y]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FullModelParams {
    pub detunings: [f64; 4],
    pub trap_nu_x: f64,
    pub trap_nu_y: f64,
    pub lamb_dicke: [f64; 4],
}

impl FullModelParams {
    /// Sideband-resonant detunings `δ_1x = −δ_2x = −ν_x`, `δ_1y = −δ_2y = ν_y`
    /// and a common Lamb–Dicke parameter.
    pub fn resonant(nu_x: f64, nu_y: f64, eta: f64) -> Self {
        Self { detunings: [-nu_x, nu_y, nu_x, -nu_y], trap_nu_x: nu_x, trap_nu_y: nu_y, lamb_dicke: [eta; 4] }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let [d1x, d1y, d2x, d2y] = self.detunings;
        let (nx, ny) = (self.trap_nu_x, self.trap_nu_y);
        if !(nx > 0.0 && ny > 0.0) {
            out.push(format!("trap frequencies must be > 0 (nu_x = {nx}, nu_y = {ny})"));
        }
        let off = [d1x + nx, d2x - nx, d1y - ny, d2y + ny].iter().map(|x| x.abs()).fold(0.0, f64::max);
        if !(off <= RESONANCE_TOL * nx.abs().max(ny.abs()).max(1.0)) {
            out.push(format!(
                "detunings {:?} violate delta_1x = -delta_2x = -nu_x, delta_1y = -delta_2y = nu_y",
                self.detunings
            ));
        }
        for (name, eta) in ["1x", "1y", "2x", "2y"].iter().zip(self.lamb_dicke) {
            if !(eta > 0.0 && eta < 1.0) {
                out.push(format!("lamb_dicke_{name} = {eta} must lie in (0, 1)"));
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub drives: DriveSet,
    pub gamma_1: f64,
    pub gamma_2: f64,
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub n_th: f64,
    pub n_init: f64,
    pub full: Option<FullModelParams>,
}

impl SystemParams {
    /// Symmetric drives `λ_1x = λ_2y = 1` for squeeze `params`, equal
    /// electronic decay `gamma_atom` and equal motional decay `gamma_mode`.
    pub fn for_squeeze(params: &SqueezeParams, gamma_atom: f64, gamma_mode: f64, n_th: f64, n_init: f64) -> Self {
        Self {
            drives: DriveSet::for_squeeze(1.0, params),
            gamma_1: gamma_atom,
            gamma_2: gamma_atom,
            gamma_a: gamma_mode,
            gamma_b: gamma_mode,
            n_th,
            n_init,
            full: None,
        }
    }

    /// Every violated constraint, one message per field.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [
            ("gamma_1", self.gamma_1),
            ("gamma_2", self.gamma_2),
            ("gamma_a", self.gamma_a),
            ("gamma_b", self.gamma_b),
            ("n_th", self.n_th),
            ("n_init", self.n_init),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                out.push(format!("{name} = {v} must be finite and >= 0"));
            }
        }
        if self.drives.as_array().iter().any(|l| !l.re.is_finite() || !l.im.is_finite()) {
            out.push("drive couplings must be finite".into());
        }
        if let Some(full) = &self.full {
            out.extend(full.violations());
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
}

/// Sideband Hamiltonian
/// `λ_1x a σ_10 + λ_1y b† σ_10 + λ_2y b σ_20 + λ_2x a† σ_20 + h.c.`.
pub fn effective_hamiltonian(drives: &DriveSet, space: SpaceSpec) -> Operator {
    let ladder = Ladder::new(space);
    let s10 = sigma(1, 0, space).expect("valid levels");
    let s20 = sigma(2, 0, space).expect("valid levels");
    let ad = ladder.a.dagger();
    let bd = ladder.b.dagger();
    ladder
        .a
        .mul(&s10)
        .scale(drives.lambda_1x)
        .add(&bd.mul(&s10).scale(drives.lambda_1y))
        .add(&ladder.b.mul(&s20).scale(drives.lambda_2y))
        .add(&ad.mul(&s20).scale(drives.lambda_2x))
        .plus_hc()
}

/// Couplings `(λ̃_a, λ̃_b)` of the squeeze-frame Hamiltonian.
pub fn transformed_couplings(drives: &DriveSet, params: &SqueezeParams, tol: f64) -> Result<(C64, C64)> {
    let worst = squeeze_residuals(drives, params).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = drives.scale().max(f64::MIN_POSITIVE) * params.r().cosh();
    if worst > tol * scale {
        return Err(Error::InconsistentDrives(format!(
            "squeeze constraints violated: residual {worst:.3e}"
        )));
    }
    let (c, s) = (params.r().cosh(), params.r().sinh());
    let e = C64::from_polar(1.0, -params.phi());
    Ok((drives.lambda_1x * c - e * drives.lambda_1y * s, drives.lambda_2y * c - e * drives.lambda_2x * s))
}

/// `S†(ξ) H S(ξ) = λ̃_a a σ_10 + λ̃_b b σ_20 + h.c.`
pub fn transformed_hamiltonian(drives: &DriveSet, params: &SqueezeParams, space: SpaceSpec) -> Result<Operator> {
    let (la, lb) = transformed_couplings(drives, params, 1e-9)?;
    let ladder = Ladder::new(space);
    let s10 = sigma(1, 0, space)?;
    let s20 = sigma(2, 0, space)?;
    Ok(ladder.a.mul(&s10).scale(la).add(&ladder.b.mul(&s20).scale(lb)).plus_hc())
}

/// One term `c e^{−iωt} O` of the time-dependent Hamiltonian (its Hermitian
/// conjugate is implied).
#[derive(Clone, Debug)]
struct Term {
    coefficient: C64,
    frequency: f64,
    op: CsrMatrix,
}

/// Interaction-picture Hamiltonian in first order of the Lamb–Dicke
/// expansion: for each drive `Ω e^{−iδt}[1 + iη(α e^{−iνt} + α† e^{iνt})]σ + h.c.`
#[derive(Clone, Debug)]
pub struct FullModel {
    space: SpaceSpec,
    terms: Vec<Term>,
}

impl FullModel {
    pub fn new(params: &SystemParams, space: SpaceSpec) -> Result<Self> {
        params.validate()?;
        let full = params
            .full
            .ok_or_else(|| Error::Config(vec!["full model requires detunings, trap frequencies and lamb_dicke".into()]))?;
        let ladder = Ladder::new(space);
        let s10 = sigma(1, 0, space)?;
        let s20 = sigma(2, 0, space)?;
        let lambdas = params.drives.as_array();
        let mut terms = Vec::new();
        for k in 0..4 {
            let (mode, nu) = if k == 0 || k == 2 { (&ladder.a, full.trap_nu_x) } else { (&ladder.b, full.trap_nu_y) };
            let flip = if k < 2 { &s10 } else { &s20 };
            let eta = full.lamb_dicke[k];
            let rabi = lambdas[k] / (C64::i() * eta);
            let delta = full.detunings[k];
            let side = rabi * C64::i() * eta;
            terms.push(Term { coefficient: rabi, frequency: delta, op: flip.matrix().clone() });
            terms.push(Term { coefficient: side, frequency: delta + nu, op: mode.mul(flip).matrix().clone() });
            terms.push(Term { coefficient: side, frequency: delta - nu, op: mode.dagger().mul(flip).matrix().clone() });
        }
        Ok(Self { space, terms })
    }

    pub fn space(&self) -> SpaceSpec {
        self.space
    }

    pub fn hamiltonian_at(&self, t: f64) -> Operator {
        let d = self.space.total_dim();
        let h = self.terms.iter().fold(CsrMatrix::zeros(d, d), |acc, term| {
            acc.add(&term.op.scale(term.coefficient * C64::from_polar(1.0, -term.frequency * t)))
        });
        Operator::from_sparse(self.space, h).expect("dimensions match").plus_hc()
    }

    /// Sum of the terms that do not oscillate, i.e. the rotating-wave limit.
    pub fn stationary_part(&self) -> Operator {
        let d = self.space.total_dim();
        let h = self
            .terms
            .iter()
            .filter(|term| term.frequency.abs() <= RESONANCE_TOL)
            .fold(CsrMatrix::zeros(d, d), |acc, term| acc.add(&term.op.scale(term.coefficient)));
        Operator::from_sparse(self.space, h).expect("dimensions match").plus_hc()
    }

    /// Shortest oscillation period among the driven terms.
    pub fn fastest_period(&self) -> f64 {
        let w = self.terms.iter().map(|t| t.frequency.abs()).fold(0.0, f64::max);
        if w > 0.0 {
            2.0 * std::f64::consts::PI / w
        } else {
            f64::INFINITY
        }
    }
}

pub fn full_hamiltonian_at(t: f64, params: &SystemParams, space: SpaceSpec) -> Result<Operator> {
    Ok(FullModel::new(params, space)?.hamiltonian_at(t))
}

/// `D[c]` with the given rate.
pub fn lindblad_dissipator(c: &Operator, rate: f64) -> Result<Superoperator> {
    Superoperator::dissipator(c, rate)
}

/// Electronic decay channels `(σ_01, Γ_1)` and `(σ_02, Γ_2)`.
pub fn atomic_channels(params: &SystemParams, space: SpaceSpec) -> Vec<(Operator, f64)> {
    vec![
        (sigma(0, 1, space).expect("valid levels"), params.gamma_1),
        (sigma(0, 2, space).expect("valid levels"), params.gamma_2),
    ]
}

/// Thermal-bath channels: `(α, (n_th + 1)γ_α)` and `(α†, n_th γ_α)` per mode.
pub fn thermal_channels(params: &SystemParams, space: SpaceSpec) -> Vec<(Operator, f64)> {
    let ladder = Ladder::new(space);
    let mut out = Vec::new();
    for (op, gamma) in [(ladder.a, params.gamma_a), (ladder.b, params.gamma_b)] {
        let up = op.dagger();
        out.push((op, (params.n_th + 1.0) * gamma));
        out.push((up, params.n_th * gamma));
    }
    out
}

pub fn thermal_liouvillian(params: &SystemParams, space: SpaceSpec) -> Result<Superoperator> {
    sum_dissipators(space, &thermal_channels(params, space))
}

fn sum_dissipators(space: SpaceSpec, channels: &[(Operator, f64)]) -> Result<Superoperator> {
    channels
        .iter()
        .try_fold(Superoperator::zero(space), |acc, (c, rate)| Ok(acc.add(&lindblad_dissipator(c, *rate)?)))
}

/// `−i[H, ·] + Σ D[c_k]`.
pub fn build_liouvillian(h: &Operator, channels: &[(Operator, f64)]) -> Result<Superoperator> {
    let err = h.hermiticity_error();
    if !(err <= HERMITIAN_TOL) {
        return Err(Error::InvalidHamiltonian(err));
    }
    Ok(Superoperator::hamiltonian(h).add(&sum_dissipators(h.space(), channels)?))
}

/// Generator of the sideband model with electronic decay and thermal baths.
pub fn master_equation(params: &SystemParams, space: SpaceSpec) -> Result<Superoperator> {
    params.validate()?;
    let mut channels = atomic_channels(params, space);
    channels.extend(thermal_channels(params, space));
    build_liouvillian(&effective_hamiltonian(&params.drives, space), &channels)
}

/// Squeeze-frame generator with electronic decay only.
pub fn transformed_master_equation(
    params: &SystemParams,
    squeeze: &SqueezeParams,
    space: SpaceSpec,
) -> Result<Superoperator> {
    params.validate()?;
    let h = transformed_hamiltonian(&params.drives, squeeze, space)?;
    build_liouvillian(&h, &atomic_channels(params, space))
}

/// Generator whose Hamiltonian part is the full time-dependent model.
#[derive(Clone, Debug)]
pub struct TimeDependentGenerator {
    model: FullModel,
    dissipators: Superoperator,
}

impl TimeDependentGenerator {
    pub fn new(params: &SystemParams, space: SpaceSpec) -> Result<Self> {
        let model = FullModel::new(params, space)?;
        let mut channels = atomic_channels(params, space);
        channels.extend(thermal_channels(params, space));
        Ok(Self { model, dissipators: sum_dissipators(space, &channels)? })
    }

    pub fn space(&self) -> SpaceSpec {
        self.model.space
    }

    pub fn model(&self) -> &FullModel {
        &self.model
    }

    /// `L(t) ρ` without assembling a superoperator.
    pub fn apply(&self, t: f64, rho: &Array2<C64>) -> Array2<C64> {
        let h = self.model.hamiltonian_at(t);
        let hr = h.matrix().mul_dense(rho);
        let rh = h.matrix().dense_mul(rho);
        let mut out = self.dissipators.apply(rho);
        out.scaled_add(C64::new(0.0, -1.0), &hr);
        out.scaled_add(C64::new(0.0, 1.0), &rh);
        out
    }
}

/// Engineered decay rate `4λ²/Γ` after eliminating the excited levels.
pub fn engineered_rate(lambda: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("decay rate must be > 0, got {gamma}")));
    }
    Ok(4.0 * lambda * lambda / gamma)
}

/// Relaxation rate of the squeezed normal modes under the sideband model
/// with equal couplings `|λ̃|` and electronic decay `Γ` (no thermal bath):
/// twice the slowest decay constant of the amplitude equations
/// `ȧ = −iλ̃* σ`, `σ̇ = −iλ̃ a − (Γ/2)σ`. Reduces to `4|λ̃|²/Γ` for `Γ ≫ |λ̃|`.
pub fn normal_mode_relaxation_rate(lambda_tilde: f64, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("decay rate must be > 0, got {gamma}")));
    }
    let q = gamma * gamma / 16.0 - lambda_tilde * lambda_tilde;
    let slowest = if q >= 0.0 { gamma / 4.0 - q.sqrt() } else { gamma / 4.0 };
    Ok(2.0 * slowest)
}

/// Frequency in MHz of a quantity measured in units of `λ`.
pub fn to_mhz(value_per_lambda: f64, lambda_mhz: f64) -> f64 {
    value_per_lambda * lambda_mhz
}

/// Inverse of [`to_mhz`].
pub fn from_mhz(value_mhz: f64, lambda_mhz: f64) -> f64 {
    value_mhz / lambda_mhz
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::DensityState;
    use crate::linalg;
    use crate::states::{conjugation_space, squeeze_conjugate};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn paper_params(gamma_mode: f64) -> SystemParams {
        SystemParams::for_squeeze(&SqueezeParams::new(1.0, 0.0).unwrap(), 10.0, gamma_mode, 0.5, 2.0)
    }

    #[test]
    fn zero_drives_give_zero_hamiltonian() {
        let space = SpaceSpec::new(4, 3).unwrap();
        assert_eq!(effective_hamiltonian(&DriveSet::zero(), space).matrix().nnz(), 0);
    }

    #[test]
    fn single_sideband_matrix_elements() {
        let space = SpaceSpec::new(5, 3).unwrap();
        let zero = c(0.0, 0.0);
        let h = effective_hamiltonian(&DriveSet::new(c(1.0, 0.0), zero, zero, zero), space);
        for n in 1..5 {
            for m in 0..3 {
                let v = h.matrix().get(space.index(n - 1, m, 1), space.index(n, m, 0));
                assert!((v - c((n as f64).sqrt(), 0.0)).norm() < 1e-15);
            }
        }
        assert_eq!(h.matrix().nnz(), 2 * 4 * 3);
    }

    #[test]
    fn transformed_couplings_in_paper_regime() {
        let p = SqueezeParams::new(1.0, 0.0).unwrap();
        let (la, lb) = transformed_couplings(&DriveSet::for_squeeze(1.0, &p), &p, 1e-9).unwrap();
        let sech = 1.0 / 1f64.cosh();
        assert!((la - c(sech, 0.0)).norm() < 1e-15 && (lb - c(sech, 0.0)).norm() < 1e-15);
        assert!((sech - 0.6481).abs() < 1e-4);
    }

    #[test]
    fn transformed_coupling_magnitude_identity() {
        for (r, phi) in [(0.3, 0.0), (1.0, 1.2), (1.7, -2.9)] {
            let p = SqueezeParams::new(r, phi).unwrap();
            let d = DriveSet::for_squeeze(0.8, &p);
            let (la, lb) = transformed_couplings(&d, &p, 1e-9).unwrap();
            assert!((la.norm() - 0.8 / r.cosh()).abs() < 1e-12);
            assert!((lb.norm() - 0.8 / r.cosh()).abs() < 1e-12);
        }
        let p = SqueezeParams::new(1.0, 0.0).unwrap();
        let bad = DriveSet::for_squeeze(1.0, &SqueezeParams::new(0.5, 0.0).unwrap());
        assert!(matches!(transformed_couplings(&bad, &p, 1e-9), Err(Error::InconsistentDrives(_))));
    }

    #[test]
    fn vacuum_squeeze_reduces_to_plain_sidebands() {
        let space = SpaceSpec::new(4, 4).unwrap();
        let d = DriveSet::new(c(0.7, 0.2), c(0.0, 0.0), c(0.0, 0.0), c(-0.4, 1.0));
        let ht = transformed_hamiltonian(&d, &SqueezeParams::vacuum(), space).unwrap();
        assert!(ht.sub(&effective_hamiltonian(&d, space)).max_abs() < 1e-15);
    }

    #[test]
    fn squeeze_frame_conjugation_on_interior() {
        let space = SpaceSpec::new(18, 18).unwrap();
        let p = SqueezeParams::new(1.0, 0.0).unwrap();
        let d = DriveSet::for_squeeze(1.0, &p);
        let work = conjugation_space(space, &p);
        let conj = squeeze_conjugate(&effective_hamiltonian(&d, work), &p, space).unwrap();
        let target = transformed_hamiltonian(&d, &p, space).unwrap();
        let inside = |i: usize| {
            let [na, nb, _] = space.split(i);
            na + 4 < 18 && nb + 4 < 18
        };
        let err = conj
            .sub(&target)
            .matrix()
            .iter()
            .filter(|&(i, j, _)| inside(i) && inside(j))
            .map(|(_, _, v)| v.norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err:.3e}");
    }

    #[test]
    fn full_model_carrier_and_sidebands_at_t0() {
        let space = SpaceSpec::new(3, 3).unwrap();
        let zero = c(0.0, 0.0);
        let eta = 0.1;
        let mut params = SystemParams::for_squeeze(&SqueezeParams::vacuum(), 0.0, 0.0, 0.0, 0.0);
        params.drives = DriveSet::new(c(1.0, 0.0), zero, zero, zero);
        params.full = Some(FullModelParams::resonant(30.0, 31.0, eta));
        let h = full_hamiltonian_at(0.0, &params, space).unwrap();
        // Ω_1x = λ_1x / (iη) = −10i; carrier Ω σ_10, sideband iηΩ(a + a†)σ_10 = (a + a†)σ_10.
        let omega = c(0.0, -10.0);
        let v = h.matrix().get(space.index(0, 0, 1), space.index(0, 0, 0));
        assert!((v - omega).norm() < 1e-12);
        let v = h.matrix().get(space.index(0, 0, 1), space.index(1, 0, 0));
        assert!((v - c(1.0, 0.0)).norm() < 1e-12);
        let v = h.matrix().get(space.index(1, 0, 1), space.index(0, 0, 0));
        assert!((v - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn full_model_time_average_matches_sidebands() {
        let space = SpaceSpec::new(3, 3).unwrap();
        let p = SqueezeParams::new(0.8, 0.6).unwrap();
        let mut params = SystemParams::for_squeeze(&p, 0.0, 0.0, 0.0, 0.0);
        let (nu_x, nu_y) = (7.0, 7.0);
        params.full = Some(FullModelParams::resonant(nu_x, nu_y, 0.05));
        let model = FullModel::new(&params, space).unwrap();
        // All frequencies are multiples of ν, so a midpoint average over one
        // trap period removes every oscillating term exactly.
        let n = 64;
        let period = 2.0 * std::f64::consts::PI / nu_x;
        let d = space.total_dim();
        let mut avg = Array2::<C64>::zeros((d, d));
        for k in 0..n {
            let t = period * (k as f64 + 0.5) / n as f64;
            avg += &model.hamiltonian_at(t).to_dense();
        }
        avg.mapv_inplace(|z| z / n as f64);
        let eff = effective_hamiltonian(&params.drives, space).to_dense();
        assert!(linalg::max_abs(&(&avg - &eff)) < 1e-10);
        assert!(model.stationary_part().sub(&effective_hamiltonian(&params.drives, space)).max_abs() < 1e-14);
    }

    #[test]
    fn full_model_requires_resonance_and_fields() {
        let space = SpaceSpec::new(3, 3).unwrap();
        let mut params = paper_params(0.0);
        assert!(matches!(FullModel::new(&params, space), Err(Error::Config(_))));
        let mut full = FullModelParams::resonant(30.0, 30.0, 0.1);
        full.detunings[0] = -29.0;
        full.lamb_dicke[3] = 1.5;
        params.full = Some(full);
        match FullModel::new(&params, space) {
            Err(Error::Config(v)) => assert_eq!(v.len(), 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn amplitude_damping_example() {
        let space = SpaceSpec::new(2, 2).unwrap();
        let rho = DensityState::product(
            space,
            &crate::hilbert::thermal_state(0.0, 2).unwrap(),
            &crate::hilbert::thermal_state(0.0, 2).unwrap(),
            &crate::hilbert::atomic_sigma(1, 1).unwrap(),
        )
        .unwrap();
        let out = lindblad_dissipator(&sigma(0, 1, space).unwrap(), 10.0).unwrap().apply(rho.matrix());
        let expected = sigma(0, 0, space).unwrap().sub(&sigma(1, 1, space).unwrap()).to_dense().mapv(|z| z * 10.0);
        // ρ is |0,0⟩⟨0,0| ⊗ |1⟩⟨1|, so the atomic operator acts on the vacuum block only.
        let vac = |i: usize| space.split(i)[0] == 0 && space.split(i)[1] == 0;
        for ((i, j), v) in out.indexed_iter() {
            let e = if vac(i) && vac(j) { expected[[i, j]] } else { c(0.0, 0.0) };
            assert!((v - e).norm() < 1e-14);
        }
    }

    #[test]
    fn thermal_liouvillian_has_thermal_steady_state() {
        let space = SpaceSpec::new(4, 3).unwrap();
        let mut params = paper_params(0.2);
        params.gamma_b = 0.5;
        let l = thermal_liouvillian(&params, space).unwrap();
        assert!(l.trace_preservation_error() < 1e-12);
        let rho = DensityState::thermal_ground(space, 0.5).unwrap();
        // Exact truncated birth–death stationarity: thermal populations are
        // stationary even when cut off, as detailed balance holds per link.
        let out = l.apply(rho.matrix());
        assert!(linalg::max_abs(&out) < 1e-14);
    }

    #[test]
    fn build_liouvillian_matches_term_by_term_rhs() {
        let space = SpaceSpec::new(3, 3).unwrap();
        let p = SqueezeParams::new(0.7, 0.3).unwrap();
        let params = SystemParams::for_squeeze(&p, 4.0, 0.3, 0.5, 1.0);
        let l = master_equation(&params, space).unwrap();
        let d = space.total_dim();
        let rho = DensityState::thermal_ground(space, 0.7).unwrap();
        let mut r = rho.matrix().clone();
        r[[0, 5]] = c(0.01, 0.02);
        r[[5, 0]] = c(0.01, -0.02);
        let h = effective_hamiltonian(&params.drives, space).to_dense();
        let mut rhs = (h.dot(&r) - r.dot(&h)).mapv(|z| z * c(0.0, -1.0));
        let mut channels = atomic_channels(&params, space);
        channels.extend(thermal_channels(&params, space));
        for (op, rate) in channels {
            let cm = op.to_dense();
            let cd = linalg::adjoint(&cm);
            let cdc = cd.dot(&cm);
            rhs = rhs + (cm.dot(&r).dot(&cd).mapv(|z| z * 2.0) - cdc.dot(&r) - r.dot(&cdc)).mapv(|z| z * (rate / 2.0));
        }
        let vec_r: Vec<C64> = (0..d * d).map(|p| r[[p % d, p / d]]).collect();
        let mut out = vec![c(0.0, 0.0); d * d];
        l.to_sparse().matvec(&vec_r, &mut out);
        let err = (0..d * d).map(|p| (out[p] - rhs[[p % d, p / d]]).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn empty_generator_is_zero() {
        let space = SpaceSpec::new(2, 2).unwrap();
        let l = build_liouvillian(&Operator::zero(space), &[]).unwrap();
        assert_eq!(l.to_sparse().nnz(), 0);
    }

    #[test]
    fn non_hermitian_hamiltonian_rejected() {
        let space = SpaceSpec::new(3, 3).unwrap();
        let a = Ladder::new(space).a;
        assert!(matches!(build_liouvillian(&a, &[]), Err(Error::InvalidHamiltonian(_))));
    }

    #[test]
    fn squeeze_frame_generator_annihilates_vacuum() {
        let space = SpaceSpec::new(18, 18).unwrap();
        let p = SqueezeParams::new(1.0, 0.0).unwrap();
        let l = transformed_master_equation(&paper_params(0.0), &p, space).unwrap();
        let rho = DensityState::thermal_ground(space, 0.0).unwrap();
        assert!(linalg::max_abs(&l.apply(rho.matrix())) < 1e-10);
    }

    #[test]
    fn engineered_rate_values() {
        assert!((engineered_rate(1.0, 10.0).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(engineered_rate(0.0, 10.0).unwrap(), 0.0);
        // 0.1 MHz coupling, 1 MHz decay: 0.04 MHz = 40 kHz.
        let lambda_mhz = 0.1;
        let rate = engineered_rate(1.0, from_mhz(1.0, lambda_mhz)).unwrap();
        assert!((to_mhz(rate, lambda_mhz) - 0.04).abs() < 1e-15);
        assert!(matches!(engineered_rate(1.0, 0.0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn normal_mode_rate_limits() {
        let sech = 1.0 / 1f64.cosh();
        let exact = normal_mode_relaxation_rate(sech, 10.0).unwrap();
        let approx = engineered_rate(sech, 10.0).unwrap();
        assert!((exact - approx).abs() / approx < 0.02);
        assert!((normal_mode_relaxation_rate(1.0, 1000.0).unwrap() - 0.004).abs() < 1e-7);
    }

    #[test]
    fn invalid_rates_are_all_reported() {
        let mut params = paper_params(-1.0);
        params.n_th = f64::NAN;
        match params.validate() {
            Err(Error::Config(v)) => assert_eq!(v.len(), 3),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn effective_hamiltonian_is_exactly_hermitian(v in prop::collection::vec(-2.0f64..2.0, 8)) {
            let space = SpaceSpec::new(4, 3).unwrap();
            let d = DriveSet::new(c(v[0], v[1]), c(v[2], v[3]), c(v[4], v[5]), c(v[6], v[7]));
            prop_assert_eq!(effective_hamiltonian(&d, space).hermiticity_error(), 0.0);
        }

        #[test]
        fn full_hamiltonian_is_hermitian(t in 0.0f64..50.0, eta in 0.01f64..0.5) {
            let space = SpaceSpec::new(3, 3).unwrap();
            let mut params = paper_params(0.0);
            params.full = Some(FullModelParams::resonant(20.0, 25.0, eta));
            let h = full_hamiltonian_at(t, &params, space).unwrap();
            prop_assert!(h.hermiticity_error() < 1e-12);
        }
    }
}
