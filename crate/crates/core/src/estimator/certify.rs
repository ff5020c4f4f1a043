//! Primal–dual active-set iteration on the dual box QP
//! `min ½‖y − cΔᵀu‖²  s.t. ‖u‖∞ ≤ 1`.
//!
//! Given rows `A` fixed at `u_A = σ_A`, the free rows `F` solve the
//! least-squares problem `min ‖g − cΔ_Fᵀu_F‖` with `g = y − cΔ_Aᵀσ_A`, and
//! `f = g − cΔ_Fᵀu_F` satisfies stationarity by construction.

use alloc::vec;
use alloc::vec::Vec;

use crate::banded::difference_lsq;
use crate::difference::DiffOperator;
use crate::math;

pub(crate) struct Certified {
    pub f: Vec<f64>,
    pub u: Vec<f64>,
    pub steps: usize,
}

/// `signs[r] ∈ {−1, 0, 1}` seeds the active rows. Returns `None` when the
/// iteration does not settle within `max_steps`.
pub(crate) fn active_set_solve(
    y: &[f64],
    op: &DiffOperator,
    c: f64,
    mut signs: Vec<i8>,
    max_steps: usize,
) -> Option<Certified> {
    let n = y.len();
    let m = op.rows();
    let coef = op.coefficients();
    let scale = math::max_abs(y).max(1e-300);
    let tau_add = 1e-11;
    let tau_rem = 1e-12 * scale;
    let mut previous: Vec<Vec<i8>> = Vec::new();

    for step in 1..=max_steps {
        let mut su = vec![0.0; m];
        let mut free = Vec::with_capacity(m);
        for r in 0..m {
            if signs[r] == 0 {
                free.push(r);
            } else {
                su[r] = signs[r] as f64;
            }
        }
        let dts = op.apply_transpose(&su);
        let g: Vec<f64> = (0..n).map(|i| y[i] - c * dts[i]).collect();
        let v = difference_lsq(coef, n, &free, &g).ok()?;
        let mut u = su;
        let mut fv = vec![0.0; m];
        for (p, &r) in free.iter().enumerate() {
            u[r] = v[p] / c;
            fv[r] = v[p];
        }
        let dtv = op.apply_transpose(&fv);
        let f: Vec<f64> = (0..n).map(|i| g[i] - dtv[i]).collect();
        let df = op.apply(&f);

        let mut changed = false;
        let mut next = signs.clone();
        for r in 0..m {
            if signs[r] == 0 {
                if math::abs(u[r]) > 1.0 + tau_add {
                    next[r] = if u[r] > 0.0 { 1 } else { -1 };
                    changed = true;
                }
            } else if (signs[r] as f64) * df[r] < -tau_rem {
                next[r] = 0;
                changed = true;
            }
        }
        if !changed {
            let (f, u) = refine(op, c, &free, f, u)?;
            return Some(Certified { f, u, steps: step });
        }
        if previous.iter().any(|p| *p == next) {
            return None;
        }
        previous.push(core::mem::replace(&mut signs, next));
    }
    None
}

/// Projects `f` onto `{Δ_F f = 0}` and moves the free duals to match, so that
/// stationarity is unchanged. `f = g − cΔᵀu` cancels terms of size `c`; the
/// projection works on `f` itself and removes that rounding from `Δ_F f`.
fn refine(
    op: &DiffOperator,
    c: f64,
    free: &[usize],
    mut f: Vec<f64>,
    mut u: Vec<f64>,
) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = f.len();
    let m = op.rows();
    for _ in 0..2 {
        let v = difference_lsq(op.coefficients(), n, free, &f).ok()?;
        let mut fv = vec![0.0; m];
        for (p, &r) in free.iter().enumerate() {
            fv[r] = v[p];
            u[r] += v[p] / c;
        }
        let dtv = op.apply_transpose(&fv);
        for (x, d) in f.iter_mut().zip(dtv) {
            *x -= d;
        }
    }
    Some((f, u))
}

/// Minimizer of the dual QP over the free rows with the bound rows fixed:
/// returns `(u, f)` with `f = y − cΔᵀu`.
fn equality_solve(
    y: &[f64],
    op: &DiffOperator,
    c: f64,
    signs: &[i8],
) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = y.len();
    let m = op.rows();
    let mut su = vec![0.0; m];
    let mut free = Vec::with_capacity(m);
    for r in 0..m {
        if signs[r] == 0 {
            free.push(r);
        } else {
            su[r] = signs[r] as f64;
        }
    }
    let dts = op.apply_transpose(&su);
    let g: Vec<f64> = (0..n).map(|i| y[i] - c * dts[i]).collect();
    let v = difference_lsq(op.coefficients(), n, &free, &g).ok()?;
    let mut u = su;
    let mut fv = vec![0.0; m];
    for (p, &r) in free.iter().enumerate() {
        u[r] = v[p] / c;
        fv[r] = v[p];
    }
    let dtv = op.apply_transpose(&fv);
    let f = (0..n).map(|i| g[i] - dtv[i]).collect();
    Some((u, f))
}

/// Primal active-set method on the dual box QP, one bound change per step.
///
/// Starts from a feasible `u0`; rows with `|u0_j| = 1` begin in the working
/// set. The dual objective decreases monotonically, so the method cannot cycle
/// on nondegenerate problems.
pub(crate) fn working_set_solve(
    y: &[f64],
    op: &DiffOperator,
    c: f64,
    u0: &[f64],
    max_steps: usize,
) -> Option<Certified> {
    let m = op.rows();
    let scale = math::max_abs(y).max(1e-300);
    let tau_rem = 1e-12 * scale;
    let mut u: Vec<f64> = u0.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
    let mut signs: Vec<i8> = u
        .iter()
        .map(|v| {
            if *v >= 1.0 {
                1
            } else if *v <= -1.0 {
                -1
            } else {
                0
            }
        })
        .collect();

    for step in 1..=max_steps {
        let (target, f) = equality_solve(y, op, c, &signs)?;
        let mut alpha = 1.0;
        let mut blocking = None;
        for r in 0..m {
            if signs[r] != 0 {
                continue;
            }
            let p = target[r] - u[r];
            if math::abs(target[r]) > 1.0 {
                let bound = math::signum(p);
                let a = (bound - u[r]) / p;
                if a < alpha {
                    alpha = a.max(0.0);
                    blocking = Some((r, bound));
                }
            }
        }
        match blocking {
            Some((r, bound)) => {
                for j in 0..m {
                    if signs[j] == 0 {
                        u[j] += alpha * (target[j] - u[j]);
                    }
                }
                u[r] = bound;
                signs[r] = bound as i8;
            }
            None => {
                u = target;
                let df = op.apply(&f);
                let worst = (0..m)
                    .filter(|&r| signs[r] != 0)
                    .map(|r| (r, signs[r] as f64 * df[r]))
                    .filter(|(_, v)| *v < -tau_rem)
                    .fold(None, |acc: Option<(usize, f64)>, (r, v)| match acc {
                        Some((_, w)) if w <= v => acc,
                        _ => Some((r, v)),
                    });
                match worst {
                    None => {
                        let free: Vec<usize> = (0..m).filter(|&r| signs[r] == 0).collect();
                        let (f, u) = refine(op, c, &free, f, u)?;
                        return Some(Certified { f, u, steps: step });
                    }
                    Some((r, _)) => signs[r] = 0,
                }
            }
        }
    }
    None
}
