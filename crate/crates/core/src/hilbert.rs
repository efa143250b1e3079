//! Truncated Fock spaces for the two motional modes and the three-level atom.
//!
//! The composite space is always ordered `(mode a) ⊗ (mode b) ⊗ (atom)`, so
//! the basis index of `|n_a, n_b, l⟩` is `(n_a * dim_b + n_b) * 3 + l`.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::sparse::CsrMatrix;

pub const ATOM_DIM: usize = 3;

/// Default Fock truncation per mode.
pub const DEFAULT_FOCK_DIM: usize = 18;

/// Populations in the top two Fock levels above this flag a run as
/// truncation-suspect.
pub const LEAKAGE_LIMIT: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Factor {
    A,
    B,
    Atom,
}

impl Factor {
    pub const ALL: [Factor; 3] = [Factor::A, Factor::B, Factor::Atom];

    fn position(self) -> usize {
        match self {
            Factor::A => 0,
            Factor::B => 1,
            Factor::Atom => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceSpec {
    dim_a: usize,
    dim_b: usize,
}

impl SpaceSpec {
    pub fn new(dim_a: usize, dim_b: usize) -> Result<Self> {
        if dim_a < 2 || dim_b < 2 {
            return Err(Error::InvalidDimension(format!(
                "Fock truncations must be >= 2, got dim_a = {dim_a}, dim_b = {dim_b}"
            )));
        }
        Ok(Self { dim_a, dim_b })
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn dim(&self, factor: Factor) -> usize {
        self.dims()[factor.position()]
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.dim_a, self.dim_b, ATOM_DIM]
    }

    /// Dimension of the two-mode (a ⊗ b) sector.
    pub fn modes_dim(&self) -> usize {
        self.dim_a * self.dim_b
    }

    pub fn total_dim(&self) -> usize {
        self.dim_a * self.dim_b * ATOM_DIM
    }

    pub fn index(&self, n_a: usize, n_b: usize, level: usize) -> usize {
        (n_a * self.dim_b + n_b) * ATOM_DIM + level
    }

    /// Inverse of [`SpaceSpec::index`].
    pub fn split(&self, index: usize) -> [usize; 3] {
        [index / (self.dim_b * ATOM_DIM), (index / ATOM_DIM) % self.dim_b, index % ATOM_DIM]
    }

    fn check_same(&self, other: &SpaceSpec) -> Result<()> {
        if self != other {
            return Err(Error::InvalidDimension(format!(
                "space mismatch: {self:?} vs {other:?}"
            )));
        }
        Ok(())
    }
}

/// Single-mode annihilation operator truncated to `dim` Fock levels.
pub fn annihilation(dim: usize) -> Result<Array2<C64>> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!("ladder operator needs dim >= 2, got {dim}")));
    }
    let mut a = Array2::zeros((dim, dim));
    for n in 1..dim {
        a[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(a)
}

/// Atomic transition operator `σ_lm = |l⟩⟨m|`.
pub fn atomic_sigma(l: usize, m: usize) -> Result<Array2<C64>> {
    if l >= ATOM_DIM || m >= ATOM_DIM {
        return Err(Error::InvalidIndex(format!("atomic levels are 0..=2, got ({l}, {m})")));
    }
    let mut s = Array2::zeros((ATOM_DIM, ATOM_DIM));
    s[[l, m]] = C64::new(1.0, 0.0);
    Ok(s)
}

/// Operator on the full composite space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: SpaceSpec,
    matrix: CsrMatrix,
}

impl Operator {
    pub fn from_sparse(space: SpaceSpec, matrix: CsrMatrix) -> Result<Self> {
        let d = space.total_dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::InvalidDimension(format!(
                "operator shape ({}, {}) does not match space dimension {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { space, matrix })
    }

    pub fn identity(space: SpaceSpec) -> Self {
        Self { space, matrix: CsrMatrix::identity(space.total_dim()) }
    }

    pub fn zero(space: SpaceSpec) -> Self {
        let d = space.total_dim();
        Self { space, matrix: CsrMatrix::zeros(d, d) }
    }

    pub fn space(&self) -> SpaceSpec {
        self.space
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn to_dense(&self) -> Array2<C64> {
        self.matrix.to_dense()
    }

    pub fn dagger(&self) -> Self {
        Self { space: self.space, matrix: self.matrix.adjoint() }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { space: self.space, matrix: self.matrix.scale(c) }
    }

    pub fn add(&self, other: &Operator) -> Self {
        assert_eq!(self.space, other.space, "operator spaces differ");
        Self { space: self.space, matrix: self.matrix.add(&other.matrix) }
    }

    pub fn sub(&self, other: &Operator) -> Self {
        assert_eq!(self.space, other.space, "operator spaces differ");
        Self { space: self.space, matrix: self.matrix.sub(&other.matrix) }
    }

    pub fn mul(&self, other: &Operator) -> Self {
        assert_eq!(self.space, other.space, "operator spaces differ");
        Self { space: self.space, matrix: self.matrix.matmul(&other.matrix) }
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    /// `A + A^dag`.
    pub fn plus_hc(&self) -> Self {
        self.add(&self.dagger())
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.max_abs()
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.matrix.hermiticity_error()
    }
}

/// Embeds a single-factor matrix into the composite space with identities on
/// the other two factors.
pub fn embed(factor_matrix: &Array2<C64>, which: Factor, space: SpaceSpec) -> Result<Operator> {
    let d = space.dim(which);
    if factor_matrix.dim() != (d, d) {
        return Err(Error::InvalidDimension(format!(
            "factor {which:?} has dimension {d}, matrix is {:?}",
            factor_matrix.dim()
        )));
    }
    let local = CsrMatrix::from_dense(factor_matrix.view(), 0.0);
    let parts: Vec<CsrMatrix> = Factor::ALL
        .iter()
        .map(|&f| if f == which { local.clone() } else { CsrMatrix::identity(space.dim(f)) })
        .collect();
    let matrix = parts[0].kron(&parts[1]).kron(&parts[2]);
    Operator::from_sparse(space, matrix)
}

/// The commonly used embedded operators of one space.
#[derive(Clone, Debug)]
pub struct Ladder {
    pub a: Operator,
    pub b: Operator,
}

impl Ladder {
    pub fn new(space: SpaceSpec) -> Self {
        let a = embed(&annihilation(space.dim_a()).unwrap(), Factor::A, space).unwrap();
        let b = embed(&annihilation(space.dim_b()).unwrap(), Factor::B, space).unwrap();
        Self { a, b }
    }
}

/// Embedded `σ_lm`.
pub fn sigma(l: usize, m: usize, space: SpaceSpec) -> Result<Operator> {
    embed(&atomic_sigma(l, m)?, Factor::Atom, space)
}

/// Thermal (Bose–Einstein) state of one mode, renormalized over the
/// truncated basis.
pub fn thermal_state(n_bar: f64, dim: usize) -> Result<Array2<C64>> {
    if !(n_bar >= 0.0) || !n_bar.is_finite() {
        return Err(Error::InvalidArgument(format!("thermal occupation must be >= 0, got {n_bar}")));
    }
    if dim < 2 {
        return Err(Error::InvalidDimension(format!("thermal state needs dim >= 2, got {dim}")));
    }
    let ratio = n_bar / (1.0 + n_bar);
    let weights: Vec<f64> = (0..dim).map(|n| ratio.powi(n as i32) / (1.0 + n_bar)).collect();
    let total: f64 = weights.iter().sum();
    let mut rho = Array2::zeros((dim, dim));
    for (n, w) in weights.into_iter().enumerate() {
        rho[[n, n]] = C64::new(w / total, 0.0);
    }
    Ok(rho)
}

/// Density matrix on the composite space.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityState {
    space: SpaceSpec,
    matrix: Array2<C64>,
}

impl DensityState {
    pub const TRACE_TOL: f64 = 1e-9;
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const EIGEN_FLOOR: f64 = -1e-8;

    /// Validates trace, Hermiticity and positivity before accepting `matrix`.
    pub fn new(space: SpaceSpec, matrix: Array2<C64>) -> Result<Self> {
        let state = Self::from_matrix_unchecked(space, matrix)?;
        state.validate()?;
        Ok(state)
    }

    /// Shape-checked but otherwise unvalidated constructor.
    pub fn from_matrix_unchecked(space: SpaceSpec, matrix: Array2<C64>) -> Result<Self> {
        let d = space.total_dim();
        if matrix.dim() != (d, d) {
            return Err(Error::InvalidDimension(format!(
                "density matrix shape {:?} does not match dimension {d}",
                matrix.dim()
            )));
        }
        Ok(Self { space, matrix })
    }

    /// `ρ_a ⊗ ρ_b ⊗ ρ_atom`.
    pub fn product(
        space: SpaceSpec,
        rho_a: &Array2<C64>,
        rho_b: &Array2<C64>,
        rho_atom: &Array2<C64>,
    ) -> Result<Self> {
        let expected = space.dims();
        for (m, d) in [rho_a, rho_b, rho_atom].iter().zip(expected) {
            if m.dim() != (d, d) {
                return Err(Error::InvalidDimension(format!(
                    "factor state of shape {:?}, expected ({d}, {d})",
                    m.dim()
                )));
            }
        }
        // A product of valid factors is valid, so only the small factors are
        // checked.
        for m in [rho_a, rho_b, rho_atom] {
            validate_matrix(m)?;
        }
        let matrix = kron_dense(&kron_dense(rho_a, rho_b), rho_atom);
        Self::from_matrix_unchecked(space, matrix)
    }

    /// `|ψ⟩⟨ψ|` for a normalized composite-space ket.
    pub fn pure(space: SpaceSpec, ket: &Array1<C64>) -> Result<Self> {
        if ket.len() != space.total_dim() {
            return Err(Error::InvalidDimension(format!(
                "ket length {} does not match dimension {}",
                ket.len(),
                space.total_dim()
            )));
        }
        let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if (norm - 1.0).abs() > Self::TRACE_TOL {
            return Err(Error::Integrity(format!("ket norm squared {norm} differs from 1")));
        }
        let matrix = Array2::from_shape_fn((ket.len(), ket.len()), |(i, j)| ket[i] * ket[j].conj());
        Self::from_matrix_unchecked(space, matrix)
    }

    /// Both modes thermal at `n_bar`, atom in `|0⟩`.
    pub fn thermal_ground(space: SpaceSpec, n_bar: f64) -> Result<Self> {
        Self::product(
            space,
            &thermal_state(n_bar, space.dim_a())?,
            &thermal_state(n_bar, space.dim_b())?,
            &atomic_sigma(0, 0)?,
        )
    }

    pub fn space(&self) -> SpaceSpec {
        self.space
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        linalg::trace(&self.matrix)
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.matrix.nrows();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.matrix[[i, j]] - self.matrix[[j, i]].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(linalg::hermitian_eigenvalues(&self.matrix)?.first().copied().unwrap_or(0.0))
    }

    pub fn validate(&self) -> Result<()> {
        validate_matrix(&self.matrix)
    }

    /// Reduced state on modes a ⊗ b.
    pub fn modes(&self) -> Array2<C64> {
        partial_trace(self, &[Factor::A, Factor::B]).expect("non-empty keep set")
    }

    /// Population in the top two Fock levels of either mode (the larger one).
    pub fn truncation_leakage(&self) -> f64 {
        let [da, db, _] = self.space.dims();
        let mut pa = vec![0.0; da];
        let mut pb = vec![0.0; db];
        for i in 0..self.space.total_dim() {
            let [na, nb, _] = self.space.split(i);
            let p = self.matrix[[i, i]].re;
            pa[na] += p;
            pb[nb] += p;
        }
        let top2 = |p: &[f64]| p[p.len() - 2..].iter().sum::<f64>();
        top2(&pa).max(top2(&pb))
    }
}

/// Trace, Hermiticity and positivity checks of a density matrix.
fn validate_matrix(m: &Array2<C64>) -> Result<()> {
    let tr = m.diag().sum();
    if (tr - C64::new(1.0, 0.0)).norm() > DensityState::TRACE_TOL {
        return Err(Error::Integrity(format!("trace {tr} differs from 1")));
    }
    let herm = crate::linalg::max_abs(&(m - &crate::linalg::adjoint(m)));
    if herm > DensityState::HERMITIAN_TOL {
        return Err(Error::Integrity(format!("Hermiticity error {herm:.3e}")));
    }
    let min = crate::linalg::hermitian_eigenvalues(m)?.first().copied().unwrap_or(0.0);
    if min < DensityState::EIGEN_FLOOR {
        return Err(Error::Integrity(format!("negative eigenvalue {min:.3e}")));
    }
    Ok(())
}

pub(crate) fn kron_dense(x: &Array2<C64>, y: &Array2<C64>) -> Array2<C64> {
    let (p, q) = y.dim();
    Array2::from_shape_fn((x.nrows() * p, x.ncols() * q), |(i, j)| {
        x[[i / p, j / q]] * y[[i % p, j % q]]
    })
}

/// Traces out every factor not in `keep`. The kept factors stay in the
/// global (a, b, atom) order regardless of the order of `keep`.
pub fn partial_trace(rho: &DensityState, keep: &[Factor]) -> Result<Array2<C64>> {
    if keep.is_empty() {
        return Err(Error::InvalidArgument("partial trace needs at least one kept factor".into()));
    }
    let space = rho.space();
    let dims = space.dims();
    let kept: Vec<bool> = Factor::ALL.iter().map(|f| keep.contains(f)).collect();
    let keep_dim: usize = (0..3).filter(|&k| kept[k]).map(|k| dims[k]).product();
    let trace_dim: usize = (0..3).filter(|&k| !kept[k]).map(|k| dims[k]).product();

    // Maps (kept multi-index, traced multi-index) to a full basis index.
    let compose = |kept_idx: usize, traced_idx: usize| -> usize {
        let mut digits = [0usize; 3];
        let (mut ki, mut ti) = (kept_idx, traced_idx);
        for k in (0..3).rev() {
            if kept[k] {
                digits[k] = ki % dims[k];
                ki /= dims[k];
            } else {
                digits[k] = ti % dims[k];
                ti /= dims[k];
            }
        }
        space.index(digits[0], digits[1], digits[2])
    };

    let m = rho.matrix();
    Ok(Array2::from_shape_fn((keep_dim, keep_dim), |(i, j)| {
        (0..trace_dim).map(|t| m[[compose(i, t), compose(j, t)]]).sum()
    }))
}

/// `Tr(op ρ)`.
pub fn expectation(op: &Operator, rho: &DensityState) -> Result<C64> {
    op.space().check_same(&rho.space())?;
    Ok(trace_product(op.matrix(), rho.matrix()))
}

/// `Tr(A X)` for sparse `A` and dense `X` in O(nnz).
pub(crate) fn trace_product(a: &CsrMatrix, x: &Array2<C64>) -> C64 {
    a.iter().map(|(i, j, v)| v * x[[j, i]]).sum()
}
