//! Two-mode squeezing: the squeeze parameters implied by the drive couplings,
//! the squeeze operator itself and the analytic TMVS target state.
//!
//! Sign convention: with `ξ = r e^{iφ}` and `S(ξ) = exp(ξ* ab − ξ a†b†)`,
//! `S(ξ)|0,0⟩ = Σ_n (−e^{iφ} tanh r)^n / cosh r |n,n⟩`. Drive phases enter the
//! couplings as `λ_{jα} = i η_{jα} |Ω_{jα}| e^{−iφ_{jα}}`, which makes
//! `φ = φ_1x − φ_1y = −(φ_2x − φ_2y)` consistent with the vanishing of the
//! cross terms under the squeeze transformation.

use std::f64::consts::PI;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Operator, SpaceSpec, ATOM_DIM};
use crate::linalg;
use crate::sparse::CsrMatrix;

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezeParams {
    r: f64,
    phi: f64,
}

impl SqueezeParams {
    pub fn new(r: f64, phi: f64) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() || !phi.is_finite() {
            return Err(Error::InvalidArgument(format!("squeeze needs finite r >= 0, got r = {r}, phi = {phi}")));
        }
        let phi = if r == 0.0 { 0.0 } else { wrap_angle(phi) };
        Ok(Self { r, phi })
    }

    pub fn vacuum() -> Self {
        Self { r: 0.0, phi: 0.0 }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn xi(&self) -> C64 {
        C64::from_polar(self.r, self.phi)
    }

    /// Mean quanta per mode of the ideal TMVS, `sinh² r`.
    pub fn ideal_mean_quanta(&self) -> f64 {
        self.r.sinh().powi(2)
    }

    /// Duan total variance of the ideal TMVS at ε = 1, `2 e^{−2r}`.
    pub fn ideal_duan_variance(&self) -> f64 {
        2.0 * (-2.0 * self.r).exp()
    }
}

/// Effective sideband couplings `λ_{jα}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveSet {
    pub lambda_1x: C64,
    pub lambda_1y: C64,
    pub lambda_2x: C64,
    pub lambda_2y: C64,
}

impl DriveSet {
    pub fn new(lambda_1x: C64, lambda_1y: C64, lambda_2x: C64, lambda_2y: C64) -> Self {
        Self { lambda_1x, lambda_1y, lambda_2x, lambda_2y }
    }

    pub fn zero() -> Self {
        let z = C64::new(0.0, 0.0);
        Self::new(z, z, z, z)
    }

    /// Couplings from Lamb–Dicke parameters, Rabi frequencies and drive
    /// phases, each ordered `[1x, 1y, 2x, 2y]`.
    pub fn from_fields(eta: [f64; 4], rabi: [f64; 4], phases: [f64; 4]) -> Self {
        let l: Vec<C64> = (0..4)
            .map(|k| C64::i() * eta[k] * C64::from_polar(rabi[k], -phases[k]))
            .collect();
        Self::new(l[0], l[1], l[2], l[3])
    }

    /// Symmetric drive set producing squeeze `params`:
    /// `λ_1x = λ_2y = λ`, `λ_1y = λ_2x = λ tanh(r) e^{iφ}`.
    pub fn for_squeeze(lambda: f64, params: &SqueezeParams) -> Self {
        let main = C64::new(lambda, 0.0);
        let cross = main * C64::from_polar(params.r().tanh(), params.phi());
        Self::new(main, cross, cross, main)
    }

    pub fn as_array(&self) -> [C64; 4] {
        [self.lambda_1x, self.lambda_1y, self.lambda_2x, self.lambda_2y]
    }

    /// Drive phases `φ_{jα}` implied by the couplings (for positive η).
    pub fn phases(&self) -> [f64; 4] {
        self.as_array().map(|l| wrap_angle(PI / 2.0 - l.arg()))
    }

    /// Largest coupling magnitude; the natural unit of rates.
    pub fn scale(&self) -> f64 {
        self.as_array().iter().map(|l| l.norm()).fold(0.0, f64::max)
    }
}

/// Residuals of the two cross-term cancellation conditions,
/// `λ_1y cosh r − e^{iφ} λ_1x sinh r` and `λ_2x cosh r − e^{iφ} λ_2y sinh r`.
pub fn squeeze_residuals(drives: &DriveSet, params: &SqueezeParams) -> [C64; 2] {
    let (c, s) = (params.r().cosh(), params.r().sinh());
    let e = C64::from_polar(1.0, params.phi());
    [
        drives.lambda_1y * c - e * drives.lambda_1x * s,
        drives.lambda_2x * c - e * drives.lambda_2y * s,
    ]
}

/// Squeeze parameters for which the squeeze transformation removes the
/// cross couplings `λ_1y`, `λ_2x`.
pub fn solve_squeeze_params(drives: &DriveSet, tol: f64) -> Result<SqueezeParams> {
    let DriveSet { lambda_1x, lambda_1y, lambda_2x, lambda_2y } = *drives;
    if lambda_1x.norm() == 0.0 || lambda_2y.norm() == 0.0 {
        return Err(Error::NoSqueezeSolution(
            "lambda_1x and lambda_2y must be non-zero".into(),
        ));
    }
    let ratio_1 = lambda_1y.norm() / lambda_1x.norm();
    let ratio_2 = lambda_2x.norm() / lambda_2y.norm();
    if ratio_1 >= 1.0 || ratio_2 >= 1.0 {
        return Err(Error::NoSqueezeSolution(format!(
            "coupling ratios must be < 1, got |λ1y/λ1x| = {ratio_1}, |λ2x/λ2y| = {ratio_2}"
        )));
    }
    if (ratio_1 - ratio_2).abs() > tol {
        return Err(Error::InconsistentDrives(format!(
            "|λ1y/λ1x| = {ratio_1} and |λ2x/λ2y| = {ratio_2} differ by more than {tol}"
        )));
    }
    let r = (0.5 * (ratio_1 + ratio_2)).atanh();

    let phase_1 = (ratio_1 > 0.0).then(|| (lambda_1y / lambda_1x).arg());
    let phase_2 = (ratio_2 > 0.0).then(|| (lambda_2x / lambda_2y).arg());
    let phi = match (phase_1, phase_2) {
        (Some(p1), Some(p2)) => {
            let gap = wrap_angle(p2 - p1);
            if gap.abs() > tol {
                return Err(Error::InconsistentDrives(format!(
                    "squeeze angles {p1} and {p2} disagree by {gap}"
                )));
            }
            p1 + 0.5 * gap
        }
        (Some(p), None) | (None, Some(p)) => p,
        (None, None) => 0.0,
    };
    let params = SqueezeParams::new(r, phi)?;

    let scale = lambda_1x.norm().max(lambda_2y.norm()) * r.cosh();
    let worst = squeeze_residuals(drives, &params).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if worst > tol * scale {
        return Err(Error::InconsistentDrives(format!(
            "cross-term residual {worst:.3e} exceeds tolerance"
        )));
    }
    Ok(params)
}

/// Extra Fock levels per mode needed for a squeeze conjugation to be free of
/// truncation artifacts on a space with `dim` levels.
///
/// `S(ξ)|n, m⟩` spreads out to roughly `n e^{2r}` quanta, and the boundary
/// defect of the truncated exponential reflects back into the interior unless
/// the working space extends well past that.
pub fn conjugation_padding(dim: usize, r: f64) -> usize {
    (1.5 * dim as f64 * (2.0 * r).exp()).ceil().max(16.0) as usize
}

/// `space` with `extra` more Fock levels on each mode.
pub fn padded_space(space: SpaceSpec, extra: usize) -> SpaceSpec {
    SpaceSpec::new(space.dim_a() + extra, space.dim_b() + extra).expect("padding keeps dims valid")
}

/// Padded working space for conjugating operators into the squeeze frame.
pub fn conjugation_space(space: SpaceSpec, params: &SqueezeParams) -> SpaceSpec {
    padded_space(space, conjugation_padding(space.dim_a().max(space.dim_b()), params.r()))
}

/// Squeeze operator on modes a ⊗ b, built block by block.
///
/// `S(ξ)` conserves `n_a − n_b`, so each difference sector is exponentiated
/// separately as a small dense matrix. The result is exactly unitary on the
/// truncated space.
pub fn squeeze_modes_sparse(params: &SqueezeParams, space: SpaceSpec) -> CsrMatrix {
    squeeze_columns(params, space, space)
}

/// Columns of the block-built `S(ξ)` on `work` for the basis states of the
/// smaller `target`, as a `work.modes_dim() × target.modes_dim()` matrix.
/// Only the difference sectors that contain target states are exponentiated.
fn squeeze_columns(params: &SqueezeParams, work: SpaceSpec, target: SpaceSpec) -> CsrMatrix {
    let (da, db) = (work.dim_a() as i64, work.dim_b() as i64);
    let (ta, tb) = (target.dim_a() as i64, target.dim_b() as i64);
    let xi = params.xi();
    let mut triplets = Vec::new();
    for diff in -(tb - 1)..ta {
        // Work states (n_b + diff, n_b), ordered by n_b.
        let nb_lo = (-diff).max(0);
        let nb_hi = (db - 1).min(da - 1 - diff);
        let len = (nb_hi - nb_lo + 1) as usize;
        let state = |k: usize| {
            let nb = nb_lo + k as i64;
            (nb + diff, nb)
        };
        let in_target = |k: usize| {
            let (na, nb) = state(k);
            (na < ta && nb < tb).then(|| (na * tb + nb) as usize)
        };
        let work_index = |k: usize| {
            let (na, nb) = state(k);
            (na * db + nb) as usize
        };
        if params.r() == 0.0 || len == 1 {
            triplets.extend((0..len).filter_map(|k| in_target(k).map(|t| (work_index(k), t, C64::new(1.0, 0.0)))));
            continue;
        }
        // ab |n_a, n_b⟩ = sqrt(n_a n_b) |n_a − 1, n_b − 1⟩ links k to k − 1.
        let mut generator = Array2::<C64>::zeros((len, len));
        for k in 1..len {
            let (na, nb) = state(k);
            let amp = ((na * nb) as f64).sqrt();
            generator[[k - 1, k]] = xi.conj() * amp;
            generator[[k, k - 1]] = -xi * amp;
        }
        let block = linalg::expm(&generator);
        for j in 0..len {
            let Some(t) = in_target(j) else { continue };
            for i in 0..len {
                let v = block[[i, j]];
                if v != C64::new(0.0, 0.0) {
                    triplets.push((work_index(i), t, v));
                }
            }
        }
    }
    CsrMatrix::from_triplets(work.modes_dim(), target.modes_dim(), triplets)
}

/// Squeeze operator restricted to modes a ⊗ b (dense).
pub fn two_mode_squeeze_modes(params: &SqueezeParams, space: SpaceSpec) -> Array2<C64> {
    squeeze_modes_sparse(params, space).to_dense()
}

/// `S_ab(ξ) ⊗ 1_atom` on the truncated space.
pub fn two_mode_squeeze_operator(params: &SqueezeParams, space: SpaceSpec) -> Operator {
    let full = squeeze_modes_sparse(params, space).kron(&CsrMatrix::identity(ATOM_DIM));
    Operator::from_sparse(space, full).expect("dimensions match by construction")
}

/// `P S†(ξ) X S(ξ) P` where `X` lives on a larger working truncation and `P`
/// projects onto `target`.
///
/// Conjugating inside the truncated space itself is wrong well below the
/// cutoff (the truncation defect of `[a, a†]` spreads one level per order of
/// the commutator series), so callers evaluate `X` with
/// [`conjugation_space`] and project back.
pub fn squeeze_conjugate(x: &Operator, params: &SqueezeParams, target: SpaceSpec) -> Result<Operator> {
    let work = x.space();
    if work.dim_a() < target.dim_a() || work.dim_b() < target.dim_b() {
        return Err(Error::InvalidDimension(format!(
            "working space {work:?} is smaller than target {target:?}"
        )));
    }
    let projected = squeeze_columns(params, work, target).kron(&CsrMatrix::identity(ATOM_DIM));
    let conj = projected.adjoint().matmul(&x.matrix().matmul(&projected));
    Operator::from_sparse(target, conj)
}

/// `S(ξ)|n_a, n_b⟩` by matrix exponentiation on the padded working space,
/// projected onto `space` and renormalized.
pub fn squeezed_fock(params: &SqueezeParams, space: SpaceSpec, n_a: usize, n_b: usize) -> Result<Array1<C64>> {
    if n_a >= space.dim_a() || n_b >= space.dim_b() {
        return Err(Error::InvalidIndex(format!("Fock state |{n_a}, {n_b}⟩ outside {space:?}")));
    }
    let work = padded_space(space, conjugation_padding(space.dim_a().max(space.dim_b()), params.r()));
    let lowest = SpaceSpec::new((n_a + 1).max(2), (n_b + 1).max(2))?;
    let column = n_a * lowest.dim_b() + n_b;
    let cols = squeeze_columns(params, work, lowest);
    let mut ket = Array1::zeros(space.modes_dim());
    for (i, _, v) in cols.iter().filter(|&(_, j, _)| j == column) {
        let (na, nb) = (i / work.dim_b(), i % work.dim_b());
        if na < space.dim_a() && nb < space.dim_b() {
            ket[na * space.dim_b() + nb] = v;
        }
    }
    let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    ket.mapv_inplace(|z| z / norm);
    Ok(ket)
}

/// `S(ξ)|0, 0⟩`; see [`squeezed_fock`].
pub fn squeezed_vacuum(params: &SqueezeParams, space: SpaceSpec) -> Array1<C64> {
    squeezed_fock(params, space, 0, 0).expect("vacuum lies in every space")
}

/// Closed-form TMVS ket on modes a ⊗ b, renormalized over the truncation.
pub fn tmvs_ket(params: &SqueezeParams, space: SpaceSpec) -> Array1<C64> {
    let q = -C64::from_polar(params.r().tanh(), params.phi());
    let mut ket = Array1::zeros(space.modes_dim());
    let mut amp = C64::new(1.0 / params.r().cosh(), 0.0);
    for n in 0..space.dim_a().min(space.dim_b()) {
        ket[n * space.dim_b() + n] = amp;
        amp *= q;
    }
    let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    ket.mapv_inplace(|z| z / norm);
    ket
}

/// `⟨Ψ|ρ|Ψ⟩` against the TMVS target, for a density matrix on modes a ⊗ b.
pub fn fidelity_to_tmvs(rho_modes: &Array2<C64>, params: &SqueezeParams, space: SpaceSpec) -> Result<f64> {
    let d = space.modes_dim();
    if rho_modes.dim() != (d, d) {
        return Err(Error::InvalidDimension(format!(
            "mode density matrix shape {:?}, expected ({d}, {d})",
            rho_modes.dim()
        )));
    }
    Ok(overlap_on_diagonal_pairs(rho_modes, &tmvs_ket(params, space), space).clamp(0.0, 1.0))
}

/// `⟨ψ|ρ|ψ⟩` for a ket supported only on `|n, n⟩`.
pub(crate) fn overlap_on_diagonal_pairs(rho: &Array2<C64>, ket: &Array1<C64>, space: SpaceSpec) -> f64 {
    let support: Vec<usize> =
        (0..space.dim_a().min(space.dim_b())).map(|n| n * space.dim_b() + n).collect();
    let mut acc = C64::new(0.0, 0.0);
    for &i in &support {
        for &j in &support {
            acc += ket[i].conj() * rho[[i, j]] * ket[j];
        }
    }
    acc.re
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    use crate::hilbert::Ladder;

    /// Max entry-wise difference over basis states whose Fock levels are all
    /// at most `dim - 1 - margin`, for matrices on modes a ⊗ b.
    fn interior_max_diff(x: &Array2<C64>, y: &Array2<C64>, space: SpaceSpec, margin: usize) -> f64 {
        let inside = |i: usize| {
            i / space.dim_b() + margin < space.dim_a() && i % space.dim_b() + margin < space.dim_b()
        };
        let mut worst = 0.0f64;
        for ((i, j), v) in x.indexed_iter() {
            if inside(i) && inside(j) {
                worst = worst.max((v - y[[i, j]]).norm());
            }
        }
        worst
    }

    /// Same on the full composite space.
    fn interior_max_diff_full(x: &Operator, y: &Operator, margin: usize) -> f64 {
        let space = x.space();
        let inside = |i: usize| {
            let [na, nb, _] = space.split(i);
            na + margin < space.dim_a() && nb + margin < space.dim_b()
        };
        x.sub(y)
            .matrix()
            .iter()
            .filter(|&(i, j, _)| inside(i) && inside(j))
            .map(|(_, _, v)| v.norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn solve_paper_regime() {
        let t = 1f64.tanh();
        let d = DriveSet::new(C64::new(1.0, 0.0), C64::new(t, 0.0), C64::new(t, 0.0), C64::new(1.0, 0.0));
        let p = solve_squeeze_params(&d, 1e-9).unwrap();
        assert!((p.r() - 1.0).abs() < 1e-12);
        assert_eq!(p.phi(), 0.0);
        assert!((t - 0.7616).abs() < 1e-4);
    }

    #[test]
    fn solve_without_cross_couplings() {
        let d = DriveSet::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.7, 0.3));
        let p = solve_squeeze_params(&d, 1e-9).unwrap();
        assert_eq!(p.r(), 0.0);
        let space = SpaceSpec::new(4, 4).unwrap();
        let s = two_mode_squeeze_operator(&p, space);
        assert_eq!(s.sub(&Operator::identity(space)).max_abs(), 0.0);
    }

    #[test]
    fn solve_from_drive_phases() {
        // Ratios 1/2 and φ_1x − φ_1y = −(φ_2x − φ_2y) = π/3.
        let phi = PI / 3.0;
        let eta = [0.1; 4];
        let rabi = [10.0, 5.0, 5.0, 10.0];
        let phases = [0.4 + phi, 0.4, -0.2, -0.2 + phi];
        let d = DriveSet::from_fields(eta, rabi, phases);
        let p = solve_squeeze_params(&d, 1e-9).unwrap();
        assert!((p.r() - 0.5f64.atanh()).abs() < 1e-12);
        assert!((p.phi() - phi).abs() < 1e-12);
        for res in squeeze_residuals(&d, &p) {
            assert!(res.norm() < 1e-12);
        }
        let back = d.phases();
        for (x, y) in back.iter().zip(phases) {
            assert!(wrap_angle(x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_rejects_bad_drives() {
        let one = C64::new(1.0, 0.0);
        let d = DriveSet::new(one, one * 1.2, one * 0.5, one);
        assert!(matches!(solve_squeeze_params(&d, 1e-9), Err(Error::NoSqueezeSolution(_))));
        let d = DriveSet::new(one, one * 0.5, one * 0.4, one);
        assert!(matches!(solve_squeeze_params(&d, 1e-9), Err(Error::InconsistentDrives(_))));
        let d = DriveSet::new(one, one * 0.5, C64::new(0.0, 0.5), one);
        assert!(matches!(solve_squeeze_params(&d, 1e-9), Err(Error::InconsistentDrives(_))));
        let d = DriveSet::new(C64::new(0.0, 0.0), one * 0.5, one * 0.5, one);
        assert!(matches!(solve_squeeze_params(&d, 1e-9), Err(Error::NoSqueezeSolution(_))));
    }

    #[test]
    fn squeeze_of_vacuum_matches_closed_form() {
        let space = SpaceSpec::new(18, 18).unwrap();
        for phi in [0.0, 0.9, -2.5] {
            let p = SqueezeParams::new(1.0, phi).unwrap();
            let from_expm = squeezed_vacuum(&p, space);
            let closed = tmvs_ket(&p, space);
            let overlap: C64 = closed.iter().zip(from_expm.iter()).map(|(x, y)| x.conj() * y).sum();
            assert!(overlap.norm_sqr() > 1.0 - 1e-6, "phi = {phi}: {}", overlap.norm_sqr());
        }
    }

    #[test]
    fn squeeze_is_unitary_on_interior() {
        let space = SpaceSpec::new(18, 18).unwrap();
        let p = SqueezeParams::new(1.0, 0.4).unwrap();
        let s = two_mode_squeeze_modes(&p, space);
        let sds = linalg::adjoint(&s).dot(&s);
        assert!(interior_max_diff(&sds, &Array2::eye(space.modes_dim()), space, 4) < 1e-6);
        let minus = SqueezeParams::new(1.0, 0.4 + PI).unwrap();
        let prod = s.dot(&two_mode_squeeze_modes(&minus, space));
        assert!(interior_max_diff(&prod, &Array2::eye(space.modes_dim()), space, 4) < 1e-6);
    }

    #[test]
    fn block_exponential_matches_dense_expm() {
        let space = SpaceSpec::new(6, 5).unwrap();
        let p = SqueezeParams::new(0.8, 1.1).unwrap();
        let ladder = Ladder::new(space);
        let ab = ladder.a.mul(&ladder.b);
        let generator = ab.scale(p.xi().conj()).sub(&ab.dagger().scale(p.xi()));
        let dense = linalg::expm(&generator.to_dense());
        let blocks = two_mode_squeeze_operator(&p, space).to_dense();
        assert!(linalg::max_abs(&(&dense - &blocks)) < 1e-12);
    }

    #[test]
    fn bogoliubov_transformation_on_interior() {
        let space = SpaceSpec::new(18, 18).unwrap();
        let p = SqueezeParams::new(1.0, 0.7).unwrap();
        let work = conjugation_space(space, &p);
        let conj = squeeze_conjugate(&Ladder::new(work).a, &p, space).unwrap();
        let ladder = Ladder::new(space);
        let e = C64::from_polar(1.0, p.phi());
        let expected = ladder.a.scale(C64::new(1f64.cosh(), 0.0)).sub(&ladder.b.dagger().scale(e * 1f64.sinh()));
        let err = interior_max_diff_full(&conj, &expected, 4);
        assert!(err < 1e-6, "error {err:.3e}");
    }

    #[test]
    fn in_place_conjugation_is_wrong_below_the_cutoff() {
        // Documents why conjugation uses a padded working space.
        let space = SpaceSpec::new(18, 18).unwrap();
        let p = SqueezeParams::new(1.0, 0.0).unwrap();
        let conj = squeeze_conjugate(&Ladder::new(space).a, &p, space).unwrap();
        let ladder = Ladder::new(space);
        let expected = ladder.a.scale(C64::new(1f64.cosh(), 0.0)).sub(&ladder.b.dagger().scale(C64::new(1f64.sinh(), 0.0)));
        assert!(interior_max_diff_full(&conj, &expected, 4) > 1e-2);
    }

    #[test]
    fn tmvs_ket_properties() {
        let space = SpaceSpec::new(18, 18).unwrap();
        let vac = tmvs_ket(&SqueezeParams::vacuum(), space);
        assert_eq!(vac[0], C64::new(1.0, 0.0));
        assert_eq!(vac.iter().filter(|z| z.norm() > 0.0).count(), 1);

        let p = SqueezeParams::new(1.0, 0.0).unwrap();
        let ket = tmvs_ket(&p, space);
        for n in 0..17 {
            let ratio = ket[(n + 1) * 19].norm() / ket[n * 19].norm();
            assert!((ratio - 1f64.tanh()).abs() < 1e-12);
        }
        let big = SpaceSpec::new(60, 60).unwrap();
        let ket = tmvs_ket(&p, big);
        let mean: f64 = (0..60).map(|n| n as f64 * ket[n * 61].norm_sqr()).sum();
        assert!((mean - 1f64.sinh().powi(2)).abs() < 1e-9);
        assert!((1f64.sinh().powi(2) - 1.3811).abs() < 1e-4);
    }

    #[test]
    fn fidelity_reference_values() {
        let space = SpaceSpec::new(18, 18).unwrap();
        let p = SqueezeParams::new(1.0, 0.0).unwrap();
        let ket = tmvs_ket(&p, space);
        let pure = Array2::from_shape_fn((324, 324), |(i, j)| ket[i] * ket[j].conj());
        assert!((fidelity_to_tmvs(&pure, &p, space).unwrap() - 1.0).abs() < 1e-12);

        let mut vac = Array2::zeros((324, 324));
        vac[[0, 0]] = C64::new(1.0, 0.0);
        let f = fidelity_to_tmvs(&vac, &p, space).unwrap();
        assert!((f - 1.0 / 1f64.cosh().powi(2)).abs() < 1e-3, "{f}");
        assert!((1.0 / 1f64.cosh().powi(2) - 0.4200).abs() < 1e-4);

        let mixed = Array2::eye(324).mapv(|z: C64| z / 324.0);
        assert!((fidelity_to_tmvs(&mixed, &p, space).unwrap() - 1.0 / 324.0).abs() < 1e-15);
        assert!(fidelity_to_tmvs(&Array2::eye(3), &p, space).is_err());
    }

    proptest! {
        #[test]
        fn accepted_drives_have_vanishing_residuals(
            r in 0.0f64..2.5, phi in -3.0f64..3.0,
            mag in 0.1f64..5.0, arg in -3.0f64..3.0, mag2 in 0.1f64..5.0, arg2 in -3.0f64..3.0,
        ) {
            let l1x = C64::from_polar(mag, arg);
            let l2y = C64::from_polar(mag2, arg2);
            let e = C64::from_polar(r.tanh(), phi);
            let d = DriveSet::new(l1x, l1x * e, l2y * e, l2y);
            let p = solve_squeeze_params(&d, 1e-9).unwrap();
            for res in squeeze_residuals(&d, &p) {
                prop_assert!(res.norm() < 1e-9 * mag.max(mag2) * r.cosh());
            }
        }

        #[test]
        fn fidelity_is_exchange_symmetric(
            r in 0.0f64..1.5,
            entries in prop::collection::vec(-1.0f64..1.0, 2 * 36 * 4),
        ) {
            let space = SpaceSpec::new(6, 6).unwrap();
            let p = SqueezeParams::new(r, 0.0).unwrap();
            let g = Array2::from_shape_fn((36, 4), |(i, j)| {
                C64::new(entries[i * 4 + j], entries[144 + i * 4 + j])
            });
            let m = g.dot(&linalg::adjoint(&g));
            let tr = linalg::trace(&m);
            let rho = m.mapv(|z| z / tr);
            let swap = |i: usize| (i % 6) * 6 + i / 6;
            let swapped = Array2::from_shape_fn((36, 36), |(i, j)| rho[[swap(i), swap(j)]]);
            let f1 = fidelity_to_tmvs(&rho, &p, space).unwrap();
            let f2 = fidelity_to_tmvs(&swapped, &p, space).unwrap();
            prop_assert!((f1 - f2).abs() < 1e-12);
        }
    }
}
