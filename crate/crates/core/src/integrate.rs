//! Dormand–Prince 5(4) integrator for complex linear ODE systems.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
    pub max_step: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct IntegratorStats {
    pub accepted_steps: u64,
    pub rejected_steps: u64,
    pub rhs_evaluations: u64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Fifth-order weights minus the embedded fourth-order ones.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// `out = y + h Σ w_k k_k`.
fn combine(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (w, k) in terms {
            acc += k[i] * *w;
        }
        *o = y[i] + acc * h;
    }
}

/// Integrates `y' = f(t, y)` from `t0`, stopping exactly at each of `stops`
/// (ascending, all `>= t0`) and calling `at_stop(index, t, y)` there.
///
/// The error of a step is measured in the max norm, scaled per component by
/// `abs + rel * max(|y|, |y_new|)`.
pub fn integrate<F, S>(
    mut f: F,
    t0: f64,
    y0: Vec<C64>,
    stops: &[f64],
    tol: Tolerances,
    mut at_stop: S,
) -> Result<(Vec<C64>, IntegratorStats)>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    S: FnMut(usize, f64, &[C64]) -> Result<()>,
{
    let n = y0.len();
    let mut stats = IntegratorStats::default();
    let mut y = y0;
    let mut t = t0;
    let zero = C64::new(0.0, 0.0);
    let mut k: Vec<Vec<C64>> = (0..7).map(|_| vec![zero; n]).collect();
    let mut stage = vec![zero; n];
    let mut y_new = vec![zero; n];

    f(t, &y, &mut k[0]);
    stats.rhs_evaluations += 1;
    let span = stops.last().map_or(0.0, |s| s - t0);
    let mut h = (0.01 * span).min(tol.max_step).max(1e-6 * span.max(1e-300));

    for (index, &t_stop) in stops.iter().enumerate() {
        if t_stop < t {
            return Err(Error::InvalidArgument(format!("stop time {t_stop} precedes {t}")));
        }
        while t < t_stop {
            let remaining = t_stop - t;
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            let min_step = 64.0 * f64::EPSILON * t.abs().max(1.0);
            if step < min_step && !last {
                return Err(Error::Stiffness { t, step });
            }

            let (k1, rest) = k.split_at_mut(1);
            let (k2, rest) = rest.split_at_mut(1);
            let (k3, rest) = rest.split_at_mut(1);
            let (k4, rest) = rest.split_at_mut(1);
            let (k5, rest) = rest.split_at_mut(1);
            let (k6, k7) = rest.split_at_mut(1);
            let (k1, k2, k3, k4, k5, k6, k7) =
                (&k1[0], &mut k2[0], &mut k3[0], &mut k4[0], &mut k5[0], &mut k6[0], &mut k7[0]);

            combine(&mut stage, &y, step, &[(A21, k1)]);
            f(t + C2 * step, &stage, k2);
            combine(&mut stage, &y, step, &[(A31, k1), (A32, k2)]);
            f(t + C3 * step, &stage, k3);
            combine(&mut stage, &y, step, &[(A41, k1), (A42, k2), (A43, k3)]);
            f(t + C4 * step, &stage, k4);
            combine(&mut stage, &y, step, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
            f(t + C5 * step, &stage, k5);
            combine(&mut stage, &y, step, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]);
            f(t + step, &stage, k6);
            combine(&mut y_new, &y, step, &[(B1, k1), (B3, k3), (B4, k4), (B5, k5), (B6, k6)]);
            f(t + step, &y_new, k7);
            stats.rhs_evaluations += 6;

            let mut err = 0.0f64;
            for i in 0..n {
                let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * step;
                let scale = tol.abs + tol.rel * y[i].norm().max(y_new[i].norm());
                err = err.max(e.norm() / scale);
            }
            if !err.is_finite() {
                return Err(Error::Integrity(format!("non-finite integrator error estimate at t = {t}")));
            }

            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                stats.accepted_steps += 1;
                t = if last { t_stop } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                // First-same-as-last: the final stage is the next step's first.
                k.swap(0, 6);
                if !last || factor < 1.0 {
                    h = (step * factor).min(tol.max_step);
                }
            } else {
                stats.rejected_steps += 1;
                h = step * factor.min(1.0);
                if h < min_step {
                    return Err(Error::Stiffness { t, step: h });
                }
            }
        }
        at_stop(index, t, &y)?;
    }
    Ok((y, stats))
}
