//! Dense and sparse linear-algebra kernels backed by `faer`, plus a
//! scaling-and-squaring matrix exponential.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

fn to_faer(m: &Array2<C64>) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]])
}

/// Induced 1-norm (max column sum).
pub fn norm_one(m: &Array2<C64>) -> f64 {
    m.columns().into_iter().map(|c| c.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn adjoint(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

pub fn trace(m: &Array2<C64>) -> C64 {
    m.diag().sum()
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
///
/// The argument is scaled by `2^-s` so its 1-norm is at most 1/2; the series
/// is then summed until the next term falls below machine precision relative
/// to the partial sum.
pub fn expm(a: &Array2<C64>) -> Array2<C64> {
    assert_eq!(a.nrows(), a.ncols(), "expm needs a square matrix");
    let n = a.nrows();
    let norm = norm_one(a);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a.mapv(|z| z * 0.5f64.powi(squarings));

    let mut sum = Array2::<C64>::eye(n);
    let mut term = Array2::<C64>::eye(n);
    for k in 1..=40 {
        term = term.dot(&scaled).mapv(|z| z / k as f64);
        sum += &term;
        if norm_one(&term) <= f64::EPSILON * norm_one(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.dot(&sum);
    }
    sum
}

/// Eigenvalues of a Hermitian matrix in nondecreasing order. Only the lower
/// triangle is read.
pub fn hermitian_eigenvalues(m: &Array2<C64>) -> Result<Vec<f64>> {
    to_faer(m)
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Linalg(format!("Hermitian eigensolver: {e:?}")))
}

/// Trace distance `||a - b||_1 / 2` between two Hermitian matrices.
pub fn trace_distance(a: &Array2<C64>, b: &Array2<C64>) -> Result<f64> {
    let diff = a - b;
    Ok(0.5 * hermitian_eigenvalues(&diff)?.iter().map(|x| x.abs()).sum::<f64>())
}

/// Right null space of a dense matrix from its SVD.
///
/// Returns the number of singular values below `rel_tol * sigma_max` together
/// with the right singular vector of the smallest singular value.
pub fn null_space(m: &Array2<C64>, rel_tol: f64) -> Result<(usize, Array1<C64>)> {
    let svd = to_faer(m).svd().map_err(|e| Error::Linalg(format!("SVD: {e:?}")))?;
    let s = svd.S().column_vector();
    let k = s.nrows();
    let sigma_max = (0..k).map(|i| s[i].re).fold(0.0, f64::max);
    let null_dim = (0..k).filter(|&i| s[i].re <= rel_tol * sigma_max).count()
        + m.ncols().saturating_sub(k);
    let (last, _) = (0..k)
        .map(|i| (i, s[i].re))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .ok_or_else(|| Error::Linalg("empty matrix".into()))?;
    let v = svd.V();
    Ok((null_dim, Array1::from_shape_fn(m.ncols(), |i| v[(i, last)])))
}

/// Solves `a x = rhs` with a sparse LU factorization with partial pivoting.
pub fn sparse_solve(a: &CsrMatrix, rhs: &[C64]) -> Result<Vec<C64>> {
    let triplets: Vec<_> = a.iter().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
    let mat = SparseColMat::<usize, C64>::try_new_from_triplets(a.nrows(), a.ncols(), &triplets)
        .map_err(|e| Error::Linalg(format!("sparse assembly: {e:?}")))?;
    let lu = mat.sp_lu().map_err(|e| Error::Linalg(format!("sparse LU: {e:?}")))?;
    let b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    let x = lu.solve(&b);
    Ok((0..rhs.len()).map(|i| x[(i, 0)]).collect())
}
