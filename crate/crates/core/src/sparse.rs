//! Minimal compressed-sparse-row complex matrix.
//!
//! Only the handful of kernels the simulator needs: assembly from triplets,
//! products with other sparse or dense matrices, Kronecker products and
//! adjoints. Column indices within a row are always sorted and unique, and
//! explicit zeros are never stored.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

/// Rows per rayon task in [`CsrMatrix::matvec`]; below this the product runs
/// on the calling thread.
const PAR_ROWS: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<C64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), data: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            data: vec![C64::new(1.0, 0.0); n],
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets. Duplicates are summed
    /// and entries that sum to exactly zero are dropped.
    pub fn from_triplets<I>(nrows: usize, ncols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, C64)>,
    {
        let mut rows: Vec<Vec<(usize, C64)>> = vec![Vec::new(); nrows];
        for (i, j, v) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            rows[i].push((j, v));
        }
        Self::from_rows(ncols, rows)
    }

    /// Builds a matrix from unsorted per-row entry lists.
    pub(crate) fn from_rows(ncols: usize, rows: Vec<Vec<(usize, C64)>>) -> Self {
        let nrows = rows.len();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for mut row in rows {
            compress_row(&mut row);
            for (j, v) in row {
                indices.push(j);
                data.push(v);
            }
            indptr.push(indices.len());
        }
        Self { nrows, ncols, indptr, indices, data }
    }

    /// Sparse copy of a dense matrix, keeping entries with `|x| > drop_tol`.
    pub fn from_dense(m: ArrayView2<C64>, drop_tol: f64) -> Self {
        let (nrows, ncols) = m.dim();
        Self::from_triplets(
            nrows,
            ncols,
            m.indexed_iter()
                .filter(|(_, v)| v.norm() > drop_tol)
                .map(|((i, j), v)| (i, j, *v)),
        )
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let range = self.indptr[i]..self.indptr[i + 1];
        self.indices[range.clone()].iter().copied().zip(self.data[range].iter().copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let range = self.indptr[i]..self.indptr[i + 1];
        match self.indices[range.clone()].binary_search(&j) {
            Ok(k) => self.data[range.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn to_dense(&self) -> Array2<C64> {
        let mut out = Array2::zeros((self.nrows, self.ncols));
        for (i, j, v) in self.iter() {
            out[[i, j]] = v;
        }
        out
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.iter().map(|(i, j, v)| (j, i, v)))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.ncols, self.nrows, self.iter().map(|(i, j, v)| (j, i, v.conj())))
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::from_triplets(self.nrows, self.ncols, self.iter().map(|(i, j, v)| (i, j, v * c)))
    }

    pub fn add(&self, other: &Self) -> Self {
        self.assert_same_shape(other);
        Self::from_triplets(self.nrows, self.ncols, self.iter().chain(other.iter()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.assert_same_shape(other);
        Self::from_triplets(
            self.nrows,
            self.ncols,
            self.iter().chain(other.iter().map(|(i, j, v)| (i, j, -v))),
        )
    }

    /// Sparse-sparse product `self * other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows, "inner dimensions differ");
        let rows = (0..self.nrows)
            .map(|i| {
                let mut acc = Vec::new();
                for (k, a) in self.row(i) {
                    acc.extend(other.row(k).map(|(j, b)| (j, a * b)));
                }
                acc
            })
            .collect();
        Self::from_rows(other.ncols, rows)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (p, q) = (other.nrows, other.ncols);
        let rows = (0..self.nrows * p)
            .map(|r| {
                let (i, k) = (r / p, r % p);
                let mut acc = Vec::new();
                for (j, a) in self.row(i) {
                    acc.extend(other.row(k).map(|(l, b)| (j * q + l, a * b)));
                }
                acc
            })
            .collect();
        Self::from_rows(self.ncols * q, rows)
    }

    /// `self * x` for dense `x`.
    pub fn mul_dense(&self, x: &Array2<C64>) -> Array2<C64> {
        assert_eq!(self.ncols, x.nrows());
        let mut out = Array2::zeros((self.nrows, x.ncols()));
        for (i, mut out_row) in out.outer_iter_mut().enumerate() {
            for (k, a) in self.row(i) {
                out_row.scaled_add(a, &x.row(k));
            }
        }
        out
    }

    /// `x * self` for dense `x`.
    pub fn dense_mul(&self, x: &Array2<C64>) -> Array2<C64> {
        assert_eq!(x.ncols(), self.nrows);
        let mut out = Array2::zeros((x.nrows(), self.ncols));
        for (k, j, a) in self.iter() {
            out.column_mut(j).scaled_add(a, &x.column(k));
        }
        out
    }

    /// `y = self * x`.
    pub fn matvec(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        let kernel = |(i, yi): (usize, &mut C64)| {
            let range = self.indptr[i]..self.indptr[i + 1];
            let mut acc = C64::new(0.0, 0.0);
            for (j, a) in self.indices[range.clone()].iter().zip(&self.data[range]) {
                acc += a * x[*j];
            }
            *yi = acc;
        };
        if self.nrows >= 2 * PAR_ROWS {
            y.par_iter_mut().enumerate().with_min_len(PAR_ROWS).for_each(kernel);
        } else {
            y.iter_mut().enumerate().for_each(kernel);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest entry-wise deviation between two matrices of the same shape.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }

    /// `max |A - A^dag|`.
    pub fn hermiticity_error(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    fn assert_same_shape(&self, other: &Self) {
        assert_eq!(
            (self.nrows, self.ncols),
            (other.nrows, other.ncols),
            "matrix shapes differ"
        );
    }
}

/// Sorts by column, sums duplicates and drops exact zeros.
fn compress_row(row: &mut Vec<(usize, C64)>) {
    row.sort_unstable_by_key(|&(j, _)| j);
    let mut out: Vec<(usize, C64)> = Vec::with_capacity(row.len());
    for &(j, v) in row.iter() {
        match out.last_mut() {
            Some((lj, lv)) if *lj == j => *lv += v,
            _ => out.push((j, v)),
        }
    }
    out.retain(|(_, v)| *v != C64::new(0.0, 0.0));
    *row = out;
}
