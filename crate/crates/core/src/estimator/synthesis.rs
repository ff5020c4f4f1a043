//! Coordinate descent on the Lasso form `min ½‖P⊥y − Ψβ‖² + c‖β‖₁` with the
//! columns `Ψ` of `Δ(k)⁺`, so that `Δ(k) f = β`.

use alloc::vec;
use alloc::vec::Vec;

use super::certify::active_set_solve;
use super::{finish, FitConfig, FitResult};
use crate::difference::{DiffOperator, PinvDictionary, DEFAULT_DENSE_CAP};
use crate::error::{Error, Result};
use crate::math;

pub(super) fn solve(y: &[f64], cfg: &FitConfig) -> Result<FitResult> {
    let n = y.len();
    if n > DEFAULT_DENSE_CAP {
        return Err(Error::DenseCapExceeded {
            n,
            cap: DEFAULT_DENSE_CAP,
        });
    }
    let op = DiffOperator::new(n, cfg.k)?;
    let dict = PinvDictionary::new(n, cfg.k)?;
    let psi = dict.to_matrix();
    let m = op.rows();
    let c = n as f64 * cfg.lambda;
    let poly = dict.project_null(y);
    let mut resid: Vec<f64> = (0..n).map(|i| y[i] - poly[i]).collect();
    let norms: Vec<f64> = (0..m).map(|j| psi.column(j).norm_squared()).collect();
    let mut beta = vec![0.0; m];
    let mut sweeps = 0;
    let mut best: Option<FitResult> = None;

    while sweeps < cfg.max_iter {
        sweeps += 1;
        let mut max_move = 0.0f64;
        for j in 0..m {
            let col = psi.column(j);
            let grad: f64 = col.iter().zip(&resid).map(|(a, b)| a * b).sum();
            let target = beta[j] + grad / norms[j];
            let thr = c / norms[j];
            let nb = if target > thr {
                target - thr
            } else if target < -thr {
                target + thr
            } else {
                0.0
            };
            let delta = nb - beta[j];
            if delta != 0.0 {
                for (r, a) in resid.iter_mut().zip(col.iter()) {
                    *r -= delta * a;
                }
                beta[j] = nb;
                max_move = max_move.max(math::abs(delta) * math::sqrt(norms[j]));
            }
        }
        if sweeps % 10 == 0 || max_move < 1e-13 {
            let signs: Vec<i8> = beta
                .iter()
                .map(|v| if *v > 0.0 { 1 } else if *v < 0.0 { -1 } else { 0 })
                .collect();
            if let Some(cert) = active_set_solve(y, &op, c, signs, 10) {
                let res = finish(y, cert.f, cert.u, sweeps + cert.steps, Vec::new(), cfg)?;
                if res.converged {
                    return Ok(res);
                }
                if best.as_ref().map_or(true, |b| res.kkt_residual < b.kkt_residual) {
                    best = Some(res);
                }
            }
        }
    }

    let f: Vec<f64> = (0..n).map(|i| y[i] - resid[i]).collect();
    let u = super::dual_by_substitution(y, &f, c, cfg.k);
    let fallback = finish(y, f, u, sweeps, Vec::new(), cfg)?;
    Ok(match best {
        Some(b) if b.kkt_residual < fallback.kkt_residual => b,
        _ => fallback,
    })
}
