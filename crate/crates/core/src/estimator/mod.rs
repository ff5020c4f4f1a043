//! The trend filtering estimator
//! `f̂ = argmin ‖y − f‖²_n + 2λ‖Δ(k) f‖₁` with KKT certification.
//!
//! Optimality is certified by a dual vector `u ∈ [−1, 1]^{n−k}` with
//! `2(f̂ − y)/n + 2λΔ(k)ᵀu = 0` and `u_j = sign((Δ(k) f̂)_j)` on the support.

mod admm;
mod certify;
mod dp;
mod synthesis;

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::difference::{DiffOperator, PinvDictionary};
use crate::error::{Error, Result};
use crate::math;

pub use dp::fused_lasso_dp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// ADMM on the analysis form, finished by an active-set certification step.
    #[default]
    Admm,
    /// Exact dynamic programming, `k = 1` only.
    DpK1,
    /// Coordinate descent on the equivalent Lasso in the `Δ(k)⁺` dictionary.
    SynthesisCd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub lambda: f64,
    pub k: usize,
    pub tol_kkt: f64,
    pub max_iter: usize,
    pub algorithm: Algorithm,
}

impl FitConfig {
    pub fn new(lambda: f64, k: usize) -> Self {
        Self {
            lambda,
            k,
            tol_kkt: 1e-8,
            max_iter: 20_000,
            algorithm: Algorithm::Admm,
        }
    }

    pub fn with_algorithm(mut self, algorithm: Algorithm) -> Self {
        self.algorithm = algorithm;
        self
    }

    pub fn with_tol(mut self, tol_kkt: f64) -> Self {
        self.tol_kkt = tol_kkt;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: self.lambda,
            });
        }
        if !(self.tol_kkt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tol_kkt",
                value: self.tol_kkt,
            });
        }
        if self.k == 0 || self.k >= n {
            return Err(Error::InvalidOrder { n, k: self.k });
        }
        if self.algorithm == Algorithm::DpK1 && self.k != 1 {
            return Err(Error::InvalidParameter {
                name: "k (dp_k1 needs k = 1)",
                value: self.k as f64,
            });
        }
        Ok(())
    }
}

/// One sample of the solver trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iter: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub f_hat: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    /// Subgradient certificate in `[−1, 1]^{n−k}`.
    pub dual: Vec<f64>,
    pub iters: usize,
    pub converged: bool,
    pub trace: Vec<TraceEntry>,
}

/// The three parts of the KKT residual, in objective units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kkt {
    /// `‖2(f − y)/n + 2λΔᵀu‖∞` with `u` clipped to `[−1, 1]`.
    pub stationarity: f64,
    /// `max(0, ‖u‖∞ − 1)` before clipping.
    pub dual_infeasibility: f64,
    /// `max |u_j − sign((Δf)_j)|` over rows with `|(Δf)_j| > support_tol`.
    pub complementarity: f64,
    /// `2λ(‖Δf‖₁ − uᵀΔf)`; reported only, since rounding in `Δf` on flat
    /// stretches is amplified by `λ`.
    pub gap: f64,
}

impl Kkt {
    pub fn residual(&self) -> f64 {
        self.stationarity
            .max(self.dual_infeasibility)
            .max(self.complementarity)
    }
}

/// Support threshold used by [`kkt`]: ten times the default tolerance.
pub const DEFAULT_SUPPORT_TOL: f64 = 1e-7;

/// KKT residual of the pair `(f, u)`.
pub fn kkt(y: &[f64], f: &[f64], u: &[f64], lambda: f64, k: usize) -> Result<Kkt> {
    kkt_with(y, f, u, lambda, k, DEFAULT_SUPPORT_TOL)
}

/// As [`kkt`], treating `|(Δf)_j| ≤ support_tol` as zero.
pub fn kkt_with(
    y: &[f64],
    f: &[f64],
    u: &[f64],
    lambda: f64,
    k: usize,
    support_tol: f64,
) -> Result<Kkt> {
    let n = y.len();
    check_len(n, f.len())?;
    let op = DiffOperator::new(n, k)?;
    check_len(op.rows(), u.len())?;
    let infeas = u.iter().fold(0.0f64, |m, v| m.max(math::abs(*v) - 1.0));
    let clipped: Vec<f64> = u.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
    let dtu = op.apply_transpose(&clipped);
    let nf = n as f64;
    let stationarity = (0..n).fold(0.0f64, |m, i| {
        m.max(math::abs(2.0 * (f[i] - y[i]) / nf + 2.0 * lambda * dtu[i]))
    });
    let df = op.apply(f);
    let gap: f64 = df
        .iter()
        .zip(&clipped)
        .map(|(d, v)| math::abs(*d) - v * d)
        .sum();
    let complementarity = df
        .iter()
        .zip(&clipped)
        .filter(|(d, _)| math::abs(**d) > support_tol)
        .fold(0.0f64, |m, (d, v)| m.max(math::abs(v - math::signum(*d))));
    Ok(Kkt {
        stationarity,
        dual_infeasibility: infeas.max(0.0),
        complementarity,
        gap: 2.0 * lambda * gap.max(0.0),
    })
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        Err(Error::DimensionMismatch { expected, found })
    } else {
        Ok(())
    }
}

/// `‖y − f‖²_n + 2λ‖Δ(k) f‖₁`.
pub fn objective(f: &[f64], y: &[f64], lambda: f64, k: usize) -> Result<f64> {
    check_len(y.len(), f.len())?;
    let op = DiffOperator::new(y.len(), k)?;
    let n = y.len() as f64;
    let fit: f64 = y.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n;
    let tv: f64 = op.apply(f).iter().map(|v| math::abs(*v)).sum();
    Ok(fit + 2.0 * lambda * tv)
}

/// Smallest `λ` for which the fit is the least-squares polynomial of degree
/// `k − 1`: `max_j |ψ_jᵀ y| / n` over the columns of `Δ(k)⁺`.
pub fn lambda_max(y: &[f64], k: usize) -> Result<f64> {
    DiffOperator::new(y.len(), k)?;
    let d = PinvDictionary::new(y.len(), k)?;
    Ok(math::max_abs(&d.inner_products(y)) / y.len() as f64)
}

/// Least-squares projection of `y` on the polynomials of degree `< k`.
pub fn polynomial_fit(y: &[f64], k: usize) -> Result<Vec<f64>> {
    DiffOperator::new(y.len(), k)?;
    Ok(PinvDictionary::new(y.len(), k)?.project_null(y))
}

/// Basic-inequality margin
/// `‖f̂−f⁰‖²_n + ‖f̂−f‖²_n − ‖f−f⁰‖²_n − 2εᵀ(f̂−f)/n − 2λ(‖Δf‖₁ − ‖Δf̂‖₁)`
/// with `ε = y − f⁰`; non-positive whenever `f̂` minimizes the objective.
pub fn check_basic_inequality(
    result: &FitResult,
    y: &[f64],
    f0: &[f64],
    f: &[f64],
    lambda: f64,
    k: usize,
) -> Result<f64> {
    let n = y.len();
    check_len(n, f0.len())?;
    check_len(n, f.len())?;
    check_len(n, result.f_hat.len())?;
    let op = DiffOperator::new(n, k)?;
    let fh = &result.f_hat;
    let nf = n as f64;
    let sq = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, z)| (x - z) * (x - z)).sum::<f64>() / nf;
    let noise: f64 = (0..n).map(|i| (y[i] - f0[i]) * (fh[i] - f[i])).sum::<f64>();
    let tv = |v: &[f64]| op.apply(v).iter().map(|x| math::abs(*x)).sum::<f64>();
    let lhs = sq(fh, f0) + sq(fh, f);
    let rhs = sq(f, f0) + 2.0 * noise / nf + 2.0 * lambda * (tv(f) - tv(fh));
    Ok(lhs - rhs)
}

/// Solves the trend filtering problem for `y`.
///
/// A result with `converged == false` is returned, not an error, when the
/// certificate does not reach `tol_kkt` within `max_iter`.
pub fn fit(y: &[f64], cfg: &FitConfig) -> Result<FitResult> {
    let n = y.len();
    cfg.validate(n)?;
    if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "y",
            value: *bad,
        });
    }
    if cfg.lambda == 0.0 {
        let f_hat = y.to_vec();
        let u = DiffOperator::new(n, cfg.k)?
            .apply(y)
            .iter()
            .map(|d| math::signum(*d))
            .collect();
        return finish(y, f_hat, u, 0, Vec::new(), cfg);
    }
    match cfg.algorithm {
        Algorithm::Admm => admm::solve(y, cfg),
        Algorithm::DpK1 => {
            let c = n as f64 * cfg.lambda;
            let f_hat = dp::fused_lasso_dp(y, c);
            let u = dual_by_substitution(y, &f_hat, c, 1);
            finish(y, f_hat, u, n, Vec::new(), cfg)
        }
        Algorithm::SynthesisCd => synthesis::solve(y, cfg),
    }
}

pub(crate) fn finish(
    y: &[f64],
    f_hat: Vec<f64>,
    u: Vec<f64>,
    iters: usize,
    trace: Vec<TraceEntry>,
    cfg: &FitConfig,
) -> Result<FitResult> {
    let kkt = kkt_with(y, &f_hat, &u, cfg.lambda, cfg.k, 10.0 * cfg.tol_kkt)?;
    let kkt_residual = kkt.residual();
    let dual = u.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
    Ok(FitResult {
        objective: objective(&f_hat, y, cfg.lambda, cfg.k)?,
        converged: kkt_residual <= cfg.tol_kkt,
        f_hat,
        kkt_residual,
        dual,
        iters,
        trace,
    })
}

/// Dual vector solving the first `n − k` stationarity equations
/// `Δᵀu = (y − f)/c` by forward substitution.
pub fn dual_by_substitution(y: &[f64], f: &[f64], c: f64, k: usize) -> Vec<f64> {
    let n = y.len();
    let coef = crate::difference::row_coefficients(k);
    let m = n - k;
    let mut u = vec![0.0; m];
    for i in 0..m {
        let mut acc = (y[i] - f[i]) / c;
        for r in i.saturating_sub(k)..i {
            acc -= coef[i - r] * u[r];
        }
        u[i] = acc / coef[0];
    }
    u
}
