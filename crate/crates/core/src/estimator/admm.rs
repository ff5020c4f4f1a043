//! Over-relaxed ADMM with residual balancing, splitting `z = Δ(k) f`.

use alloc::vec;
use alloc::vec::Vec;

use super::certify::{active_set_solve, working_set_solve};
use super::{finish, FitConfig, FitResult, TraceEntry};
use crate::banded::BandedCholesky;
use crate::difference::DiffOperator;
use crate::error::Result;
use crate::math;

const ALPHA: f64 = 1.8;
const CERTIFY_EVERY: usize = 25;
const RHO_EVERY: usize = 10;

// Keeps I + ρΔᵀΔ (condition ≈ ρ·4^k) safely factorizable.
fn clamp_rho(rho: f64, k: usize) -> f64 {
    rho.clamp(1e-10, 1e12 / math::powi(4.0, k))
}

fn factor(op: &DiffOperator, rho: f64) -> Result<BandedCholesky> {
    let mut m = op.normal_matrix();
    for i in 0..m.dim() {
        for j in i.saturating_sub(m.bandwidth())..=i {
            let v = m.get(i, j);
            m.add(i, j, v * (rho - 1.0));
        }
    }
    m.add_diagonal(1.0);
    m.cholesky()
}

fn soft(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

pub(super) fn solve(y: &[f64], cfg: &FitConfig) -> Result<FitResult> {
    let n = y.len();
    let op = DiffOperator::new(n, cfg.k)?;
    let m = op.rows();
    let c = n as f64 * cfg.lambda;
    let mut iters = 0usize;
    let mut trace = Vec::new();

    // Active-set iteration straight from the empty set settles many problems,
    // including every λ ≥ λ_max.
    if let Some(cert) = active_set_solve(y, &op, c, vec![0; m], 30) {
        let res = finish(y, cert.f, cert.u, cert.steps, trace.clone(), cfg)?;
        if res.converged {
            return Ok(res);
        }
        iters += cert.steps;
    }

    let mut rho = clamp_rho(c, cfg.k);
    let mut chol = factor(&op, rho)?;
    let mut f = y.to_vec();
    let mut z = op.apply(&f);
    let mut w = vec![0.0; m];
    let mut best: Option<FitResult> = None;

    let mut it = 0;
    while it < cfg.max_iter {
        it += 1;
        let zw: Vec<f64> = z.iter().zip(&w).map(|(a, b)| rho * (a - b)).collect();
        let dzw = op.apply_transpose(&zw);
        for i in 0..n {
            f[i] = y[i] + dzw[i];
        }
        chol.solve_in_place(&mut f);
        let df = op.apply(&f);
        let z_old = z.clone();
        let thr = c / rho;
        for r in 0..m {
            let relaxed = ALPHA * df[r] + (1.0 - ALPHA) * z_old[r];
            z[r] = soft(relaxed + w[r], thr);
            w[r] += relaxed - z[r];
        }

        if it % RHO_EVERY == 0 {
            let primal = math::norm2(&df.iter().zip(&z).map(|(a, b)| a - b).collect::<Vec<_>>());
            let dz: Vec<f64> = z.iter().zip(&z_old).map(|(a, b)| a - b).collect();
            let dual = rho * math::norm2(&op.apply_transpose(&dz));
            trace.push(TraceEntry {
                iter: iters + it,
                primal_residual: primal,
                dual_residual: dual,
                rho,
            });
            let new_rho = clamp_rho(
                if primal > 10.0 * dual {
                    rho * 2.0
                } else if dual > 10.0 * primal {
                    rho / 2.0
                } else {
                    rho
                },
                cfg.k,
            );
            if new_rho != rho {
                for x in w.iter_mut() {
                    *x *= rho / new_rho;
                }
                rho = new_rho;
                chol = factor(&op, rho)?;
            }
        }

        if it % CERTIFY_EVERY == 0 {
            let signs: Vec<i8> = z
                .iter()
                .map(|v| if *v > 0.0 { 1 } else if *v < 0.0 { -1 } else { 0 })
                .collect();
            let cert = active_set_solve(y, &op, c, signs, 10).or_else(|| {
                let u: Vec<f64> = w.iter().map(|v| rho * v / c).collect();
                working_set_solve(y, &op, c, &u, 20 * m + 100)
            });
            if let Some(cert) = cert {
                iters += cert.steps;
                let res = finish(y, cert.f, cert.u, iters + it, trace.clone(), cfg)?;
                if res.converged {
                    return Ok(res);
                }
                if best.as_ref().map_or(true, |b| res.kkt_residual < b.kkt_residual) {
                    best = Some(res);
                }
            }
        }
    }

    let u: Vec<f64> = w.iter().map(|v| rho * v / c).collect();
    let fallback = finish(y, f, u, iters + it, trace, cfg)?;
    Ok(match best {
        Some(b) if b.kkt_residual < fallback.kkt_residual => b,
        _ => fallback,
    })
}
