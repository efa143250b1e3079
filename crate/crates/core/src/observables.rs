//! Quadratures, the Duan EPR variance and other diagnostics of a state.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{partial_trace, trace_product, DensityState, Factor, Ladder, Operator, SpaceSpec};
use crate::sparse::CsrMatrix;
use crate::states::{fidelity_to_tmvs, SqueezeParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    A,
    B,
}

/// Weighting `ε` of the EPR pair `u = |ε| x_a + x_b/ε`, `v = |ε| p_a − p_b/ε`,
/// with mode b rotated by `phi` (`b → e^{−iφ} b`) to match a squeeze angle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DuanConfig {
    pub epsilon: f64,
    #[serde(default)]
    pub phi: f64,
}

impl Default for DuanConfig {
    fn default() -> Self {
        Self { epsilon: 1.0, phi: 0.0 }
    }
}

impl DuanConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon != 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!("epsilon must be finite and non-zero, got {epsilon}")));
        }
        Ok(Self { epsilon, phi: 0.0 })
    }

    pub fn with_phi(self, phi: f64) -> Self {
        Self { phi, ..self }
    }

    /// Separability bound `ε² + 1/ε²`.
    pub fn threshold(&self) -> f64 {
        self.epsilon.powi(2) + self.epsilon.powi(-2)
    }
}

fn x_of(op: &Operator) -> Operator {
    op.add(&op.dagger()).scale(C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0))
}

fn p_of(op: &Operator) -> Operator {
    op.sub(&op.dagger()).scale(C64::new(0.0, -std::f64::consts::FRAC_1_SQRT_2))
}

/// `(x_a, p_a, x_b, p_b)` with `x = (α + α†)/√2`, `p = −i(α − α†)/√2`.
pub fn quadratures(space: SpaceSpec) -> [Operator; 4] {
    rotated_quadratures(space, 0.0)
}

/// As [`quadratures`], with mode b replaced by `e^{−iφ} b`.
pub fn rotated_quadratures(space: SpaceSpec, phi: f64) -> [Operator; 4] {
    let ladder = Ladder::new(space);
    let b = ladder.b.scale(C64::from_polar(1.0, -phi));
    [x_of(&ladder.a), p_of(&ladder.a), x_of(&b), p_of(&b)]
}

/// `u` and `v` of the EPR pair.
pub fn epr_pair(space: SpaceSpec, cfg: &DuanConfig) -> (Operator, Operator) {
    let [xa, pa, xb, pb] = rotated_quadratures(space, cfg.phi);
    let e = cfg.epsilon;
    let u = xa.scale(C64::new(e.abs(), 0.0)).add(&xb.scale(C64::new(1.0 / e, 0.0)));
    let v = pa.scale(C64::new(e.abs(), 0.0)).sub(&pb.scale(C64::new(1.0 / e, 0.0)));
    (u, v)
}

fn variance(op: &CsrMatrix, squared: &CsrMatrix, rho: &ndarray::Array2<C64>) -> f64 {
    let mean = trace_product(op, rho).re;
    (trace_product(squared, rho).re - mean * mean).max(0.0)
}

/// `Var(u) + Var(v)`.
pub fn duan_total_variance(rho: &DensityState, cfg: &DuanConfig) -> f64 {
    let (u, v) = epr_pair(rho.space(), cfg);
    let m = rho.matrix();
    variance(u.matrix(), u.mul(&u).matrix(), m) + variance(v.matrix(), v.mul(&v).matrix(), m)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub variance: f64,
    pub threshold: f64,
    /// `threshold − variance`; positive certifies entanglement.
    pub margin: f64,
    pub entangled: bool,
}

/// Duan inequality check. Sufficient for entanglement in general and
/// necessary as well for Gaussian states.
pub fn entanglement_witness(rho: &DensityState, cfg: &DuanConfig) -> Witness {
    witness_from_variance(duan_total_variance(rho, cfg), cfg)
}

fn witness_from_variance(variance: f64, cfg: &DuanConfig) -> Witness {
    let threshold = cfg.threshold();
    Witness { variance, threshold, margin: threshold - variance, entangled: variance < threshold }
}

pub fn mean_quanta(rho: &DensityState, mode: Mode) -> f64 {
    let ladder = Ladder::new(rho.space());
    let op = match mode {
        Mode::A => ladder.a,
        Mode::B => ladder.b,
    };
    trace_product(op.dagger().mul(&op).matrix(), rho.matrix()).re
}

/// Populations of the three atomic levels.
pub fn atom_populations(rho: &DensityState) -> [f64; 3] {
    let atom = partial_trace(rho, &[Factor::Atom]).expect("non-empty keep set");
    [atom[[0, 0]].re, atom[[1, 1]].re, atom[[2, 2]].re]
}

/// Every scalar recorded per trajectory sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub mean_quanta_a: f64,
    pub mean_quanta_b: f64,
    pub duan_variance: f64,
    pub tmvs_fidelity: f64,
    pub atom_populations: [f64; 3],
    pub leakage: f64,
}

/// Operators precomputed once per space so that sampling a trajectory only
/// costs sparse traces and one partial trace.
#[derive(Clone, Debug)]
pub struct ObservableSet {
    space: SpaceSpec,
    target: SqueezeParams,
    duan: DuanConfig,
    n_a: CsrMatrix,
    n_b: CsrMatrix,
    u: CsrMatrix,
    u2: CsrMatrix,
    v: CsrMatrix,
    v2: CsrMatrix,
}

impl ObservableSet {
    pub fn new(space: SpaceSpec, target: SqueezeParams, duan: DuanConfig) -> Self {
        let ladder = Ladder::new(space);
        let (u, v) = epr_pair(space, &duan);
        Self {
            space,
            target,
            duan,
            n_a: ladder.a.dagger().mul(&ladder.a).matrix().clone(),
            n_b: ladder.b.dagger().mul(&ladder.b).matrix().clone(),
            u2: u.mul(&u).matrix().clone(),
            v2: v.mul(&v).matrix().clone(),
            u: u.matrix().clone(),
            v: v.matrix().clone(),
        }
    }

    pub fn space(&self) -> SpaceSpec {
        self.space
    }

    pub fn target(&self) -> &SqueezeParams {
        &self.target
    }

    pub fn duan(&self) -> &DuanConfig {
        &self.duan
    }

    pub fn measure(&self, rho: &DensityState) -> Result<Sample> {
        if rho.space() != self.space {
            return Err(Error::InvalidDimension(format!(
                "state space {:?} differs from observable space {:?}",
                rho.space(),
                self.space
            )));
        }
        let m = rho.matrix();
        Ok(Sample {
            mean_quanta_a: trace_product(&self.n_a, m).re,
            mean_quanta_b: trace_product(&self.n_b, m).re,
            duan_variance: variance(&self.u, &self.u2, m) + variance(&self.v, &self.v2, m),
            tmvs_fidelity: fidelity_to_tmvs(&rho.modes(), &self.target, self.space)?,
            atom_populations: atom_populations(rho),
            leakage: rho.truncation_leakage(),
        })
    }

    pub fn witness(&self, sample: &Sample) -> Witness {
        witness_from_variance(sample.duan_variance, &self.duan)
    }
}
