//! Lindblad generators as sums of left, right and sandwich actions on ρ.
//!
//! A [`Superoperator`] stores `L(ρ) = Lρ + ρR + Σ_k A_k ρ B_k`. Density matrices
//! are vectorized by stacking columns, so entry `(i, j)` of ρ sits at
//! `i + j·D` and `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.

use std::collections::VecDeque;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{Operator, SpaceSpec};
use crate::sparse::CsrMatrix;

#[derive(Clone, Debug)]
pub struct Superoperator {
    space: SpaceSpec,
    left: CsrMatrix,
    right: CsrMatrix,
    sandwiches: Vec<(CsrMatrix, CsrMatrix)>,
}

impl Superoperator {
    pub fn zero(space: SpaceSpec) -> Self {
        let d = space.total_dim();
        Self { space, left: CsrMatrix::zeros(d, d), right: CsrMatrix::zeros(d, d), sandwiches: Vec::new() }
    }

    /// `ρ ↦ −i[H, ρ]`.
    pub fn hamiltonian(h: &Operator) -> Self {
        let mi = C64::new(0.0, -1.0);
        Self {
            space: h.space(),
            left: h.matrix().scale(mi),
            right: h.matrix().scale(-mi),
            sandwiches: Vec::new(),
        }
    }

    /// `ρ ↦ (rate/2)(2cρc† − c†cρ − ρc†c)`.
    pub fn dissipator(c: &Operator, rate: f64) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::InvalidArgument(format!("dissipation rate must be >= 0, got {rate}")));
        }
        if rate == 0.0 {
            return Ok(Self::zero(c.space()));
        }
        let cdc = c.dagger().mul(c).scale(C64::new(-0.5 * rate, 0.0));
        Ok(Self {
            space: c.space(),
            left: cdc.matrix().clone(),
            right: cdc.matrix().clone(),
            sandwiches: vec![(c.matrix().scale(C64::new(rate, 0.0)), c.dagger().matrix().clone())],
        })
    }

    pub fn space(&self) -> SpaceSpec {
        self.space
    }

    pub fn add(mut self, other: &Superoperator) -> Self {
        assert_eq!(self.space, other.space, "superoperator spaces differ");
        self.left = self.left.add(&other.left);
        self.right = self.right.add(&other.right);
        self.sandwiches.extend(other.sandwiches.iter().cloned());
        self
    }

    /// Matrix-free action on a dense ρ.
    pub fn apply(&self, rho: &Array2<C64>) -> Array2<C64> {
        let mut out = self.left.mul_dense(rho);
        out += &self.right.dense_mul(rho);
        for (a, b) in &self.sandwiches {
            out += &a.mul_dense(&b.dense_mul(rho));
        }
        out
    }

    /// Operator `M` with `Tr L(ρ) = Tr(Mρ)` for all ρ; zero iff trace preserving.
    pub fn trace_functional(&self) -> CsrMatrix {
        self.sandwiches
            .iter()
            .fold(self.left.add(&self.right), |acc, (a, b)| acc.add(&b.matmul(a)))
    }

    /// `max |vec(I)ᵀ L|`.
    pub fn trace_preservation_error(&self) -> f64 {
        self.trace_functional().max_abs()
    }

    /// Full `D² × D²` matrix. Only sensible for small spaces.
    pub fn to_sparse(&self) -> CsrMatrix {
        let d = self.space.total_dim();
        let id = CsrMatrix::identity(d);
        let mut m = id.kron(&self.left).add(&self.right.transpose().kron(&id));
        for (a, b) in &self.sandwiches {
            m = m.add(&b.transpose().kron(a));
        }
        m
    }

    /// Restriction of the generator to the vectorized entries reachable from
    /// `seed` (an exact invariant subspace; see [`ReducedGenerator`]).
    pub fn restrict(&self, seed: impl IntoIterator<Item = usize>) -> ReducedGenerator {
        ReducedGenerator::build(self, seed)
    }
}

/// The generator restricted to the smallest set of vectorized entries that
/// contains `seed` and is closed under the generator's sparsity pattern.
///
/// Entries outside the set stay exactly zero under evolution from any state
/// supported on the seed, so evolving the reduced vector is exact. For the
/// engineered-reservoir models the set reached from the diagonal is the
/// sector where `(n_a − n_b + m_atom)` agrees on both sides of ρ, which is
/// roughly 27 times smaller than `D²` at the default truncation.
#[derive(Clone, Debug)]
pub struct ReducedGenerator {
    space: SpaceSpec,
    indices: Vec<usize>,
    position: Vec<u32>,
    matrix: CsrMatrix,
    diagonal_components: usize,
}

const ABSENT: u32 = u32::MAX;

/// Union–find over reduced positions.
struct Components {
    parent: Vec<usize>,
}

impl Components {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, x: usize, y: usize) {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx != ry {
            self.parent[rx.max(ry)] = rx.min(ry);
        }
    }
}

impl ReducedGenerator {
    fn build(op: &Superoperator, seed: impl IntoIterator<Item = usize>) -> Self {
        let space = op.space;
        let d = space.total_dim();
        assert!(d * d < ABSENT as usize, "space too large for 32-bit reduced indexing");

        // Forward edges: input (k, l) feeds output (i, l) via left[i, k],
        // (k, j) via right[l, j], and (i, j) via a[i, k] b[l, j].
        let left_t = op.left.transpose();
        let sandwich_t: Vec<CsrMatrix> = op.sandwiches.iter().map(|(a, _)| a.transpose()).collect();

        let mut position = vec![ABSENT; d * d];
        let mut indices = Vec::new();
        let mut queue = VecDeque::new();
        let mut visit = |p: usize, position: &mut Vec<u32>, queue: &mut VecDeque<usize>| {
            if position[p] == ABSENT {
                position[p] = indices.len() as u32;
                indices.push(p);
                queue.push_back(p);
            }
        };
        for p in seed {
            visit(p, &mut position, &mut queue);
        }
        while let Some(q) = queue.pop_front() {
            let (k, l) = (q % d, q / d);
            for (i, _) in left_t.row(k) {
                visit(i + l * d, &mut position, &mut queue);
            }
            for (j, _) in op.right.row(l) {
                visit(k + j * d, &mut position, &mut queue);
            }
            for (at, (_, b)) in sandwich_t.iter().zip(&op.sandwiches) {
                for (i, _) in at.row(k) {
                    for (j, _) in b.row(l) {
                        visit(i + j * d, &mut position, &mut queue);
                    }
                }
            }
        }
        // Canonical ordering makes the reduced matrix independent of seed order.
        indices.sort_unstable();
        for (n, &p) in indices.iter().enumerate() {
            position[p] = n as u32;
        }

        // Row of output (i, j): left row i, right column j, a row i x b column j.
        let right_t = op.right.transpose();
        let sandwich_bt: Vec<CsrMatrix> = op.sandwiches.iter().map(|(_, b)| b.transpose()).collect();
        let mut components = Components::new(indices.len());
        let rows: Vec<Vec<(usize, C64)>> = indices
            .iter()
            .map(|&p| {
                let (i, j) = (p % d, p / d);
                let mut row = Vec::new();
                let mut push = |q: usize, v: C64| {
                    let pos = position[q];
                    if pos != ABSENT {
                        row.push((pos as usize, v));
                    }
                };
                for (k, v) in op.left.row(i) {
                    push(k + j * d, v);
                }
                for (l, v) in right_t.row(j) {
                    push(i + l * d, v);
                }
                for ((a, _), bt) in op.sandwiches.iter().zip(&sandwich_bt) {
                    for (k, va) in a.row(i) {
                        for (l, vb) in bt.row(j) {
                            push(k + l * d, va * vb);
                        }
                    }
                }
                row
            })
            .collect();
        let matrix = CsrMatrix::from_rows(indices.len(), rows);
        for (r, c, _) in matrix.iter() {
            components.union(r, c);
        }
        let mut roots: Vec<usize> = (0..d)
            .filter_map(|i| {
                let pos = position[i + i * d];
                (pos != ABSENT).then(|| components.find(pos as usize))
            })
            .collect();
        roots.sort_unstable();
        roots.dedup();

        Self { space, indices, position, matrix, diagonal_components: roots.len() }
    }

    pub fn space(&self) -> SpaceSpec {
        self.space
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Vectorized (column-stacked) index of each reduced position.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Reduced position of vectorized index `p`, if retained.
    pub fn position(&self, p: usize) -> Option<usize> {
        let pos = self.position[p];
        (pos != ABSENT).then_some(pos as usize)
    }

    /// Number of weakly connected components that contain diagonal entries.
    /// More than one means several independent trace-carrying blocks, hence
    /// several steady states.
    pub fn diagonal_components(&self) -> usize {
        self.diagonal_components
    }

    /// Reduced vector of a dense ρ. Entries outside the set must be zero for
    /// the reduced evolution to be exact; the dropped weight is returned.
    pub fn gather(&self, rho: &Array2<C64>) -> (Vec<C64>, f64) {
        let d = self.space.total_dim();
        let x = self.indices.iter().map(|&p| rho[[p % d, p / d]]).collect();
        let dropped = rho
            .indexed_iter()
            .filter(|((i, j), _)| self.position[i + j * d] == ABSENT)
            .map(|(_, v)| v.norm())
            .fold(0.0, f64::max);
        (x, dropped)
    }

    pub fn scatter(&self, x: &[C64]) -> Array2<C64> {
        let d = self.space.total_dim();
        let mut rho = Array2::zeros((d, d));
        for (&p, v) in self.indices.iter().zip(x) {
            rho[[p % d, p / d]] = *v;
        }
        rho
    }

    /// Reduced positions of the diagonal entries of ρ.
    pub fn diagonal_positions(&self) -> Vec<usize> {
        let d = self.space.total_dim();
        (0..d).filter_map(|i| self.position(i + i * d)).collect()
    }

    /// For each reduced position, the position of the transposed entry.
    pub fn transpose_positions(&self) -> Option<Vec<usize>> {
        let d = self.space.total_dim();
        self.indices.iter().map(|&p| self.position((p / d) + (p % d) * d)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{sigma, DensityState, Ladder};
    use crate::linalg;
    use ndarray::Array1;
    use proptest::prelude::*;

    fn vec_col(m: &Array2<C64>) -> Array1<C64> {
        let d = m.nrows();
        Array1::from_shape_fn(d * d, |p| m[[p % d, p / d]])
    }

    fn random_density(space: SpaceSpec, vals: &[f64]) -> Array2<C64> {
        let d = space.total_dim();
        let g = Array2::from_shape_fn((d, d), |(i, j)| {
            let k = (i * d + j) % (vals.len() / 2);
            C64::new(vals[2 * k], vals[2 * k + 1])
        });
        let m = g.dot(&linalg::adjoint(&g));
        let tr = linalg::trace(&m);
        m.mapv(|z| z / tr)
    }

    fn test_generator(space: SpaceSpec) -> Superoperator {
        let ladder = Ladder::new(space);
        let s10 = sigma(1, 0, space).unwrap();
        let h = ladder.a.mul(&s10).scale(C64::new(0.3, 0.8)).plus_hc();
        Superoperator::hamiltonian(&h)
            .add(&Superoperator::dissipator(&sigma(0, 1, space).unwrap(), 2.0).unwrap())
            .add(&Superoperator::dissipator(&sigma(0, 2, space).unwrap(), 1.0).unwrap())
            .add(&Superoperator::dissipator(&ladder.b, 0.3).unwrap())
            .add(&Superoperator::dissipator(&ladder.b.dagger(), 0.1).unwrap())
    }

    #[test]
    fn zero_rate_gives_zero_superoperator() {
        let space = SpaceSpec::new(3, 2).unwrap();
        let z = Superoperator::dissipator(&Ladder::new(space).a, 0.0).unwrap();
        assert_eq!(z.to_sparse().nnz(), 0);
        assert!(matches!(
            Superoperator::dissipator(&Ladder::new(space).a, -1.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn amplitude_damping_of_excited_atom() {
        let space = SpaceSpec::new(2, 2).unwrap();
        let gamma = 3.0;
        let l = Superoperator::dissipator(&sigma(0, 1, space).unwrap(), gamma).unwrap();
        let excited = DensityState::product(
            space,
            &crate::hilbert::thermal_state(0.0, 2).unwrap(),
            &crate::hilbert::thermal_state(0.0, 2).unwrap(),
            &crate::hilbert::atomic_sigma(1, 1).unwrap(),
        )
        .unwrap();
        let out = l.apply(excited.matrix());
        let lower = sigma(0, 1, space).unwrap().to_dense();
        let rho = excited.matrix();
        let expected = (lower.dot(rho).dot(&linalg::adjoint(&lower)) - rho).mapv(|z| z * gamma);
        assert!(linalg::max_abs(&(&out - &expected)) < 1e-14);
    }

    #[test]
    fn vectorized_matrix_matches_direct_application() {
        let space = SpaceSpec::new(3, 2).unwrap();
        let gen = test_generator(space);
        let vals: Vec<f64> = (0..200).map(|k| ((k as f64) * 0.37).sin()).collect();
        let rho = random_density(space, &vals);
        let direct = vec_col(&gen.apply(&rho));
        let big = gen.to_sparse();
        let mut via = vec![C64::new(0.0, 0.0); direct.len()];
        big.matvec(vec_col(&rho).as_slice().unwrap(), &mut via);
        let err = direct.iter().zip(&via).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
        assert!(gen.trace_preservation_error() < 1e-12);
    }

    #[test]
    fn reduced_generator_reproduces_full_action() {
        let space = SpaceSpec::new(3, 3).unwrap();
        let gen = test_generator(space);
        let d = space.total_dim();
        let red = gen.restrict((0..d).map(|i| i + i * d));
        assert!(red.len() < d * d);
        assert_eq!(red.diagonal_components(), 1);

        let rho = DensityState::thermal_ground(space, 0.8).unwrap();
        let (x, dropped) = red.gather(rho.matrix());
        assert_eq!(dropped, 0.0);
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        red.matrix().matvec(&x, &mut y);
        let full = gen.apply(rho.matrix());
        let err = linalg::max_abs(&(&red.scatter(&y) - &full));
        assert!(err < 1e-13, "{err}");

        let t = red.transpose_positions().unwrap();
        for (n, &m) in t.iter().enumerate() {
            assert_eq!(t[m], n);
        }
    }

    #[test]
    fn frozen_populations_split_the_diagonal() {
        // Only atomic decay, no coupling: every Fock pair is its own steady block.
        let space = SpaceSpec::new(2, 2).unwrap();
        let gen = Superoperator::dissipator(&sigma(0, 1, space).unwrap(), 1.0).unwrap();
        let d = space.total_dim();
        let red = gen.restrict((0..d).map(|i| i + i * d));
        assert!(red.diagonal_components() >= 4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn dissipators_are_traceless_on_random_states(vals in prop::collection::vec(-1.0f64..1.0, 64)) {
            let space = SpaceSpec::new(3, 2).unwrap();
            let rho = random_density(space, &vals);
            let ladder = Ladder::new(space);
            for (c, rate) in [(sigma(0, 1, space).unwrap(), 10.0), (ladder.a.clone(), 0.15), (ladder.b.dagger(), 0.05)] {
                let out = Superoperator::dissipator(&c, rate).unwrap().apply(&rho);
                prop_assert!(linalg::trace(&out).norm() < 1e-12);
            }
        }
    }
}
