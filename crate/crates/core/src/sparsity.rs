//! Weights, effective sparsity and its upper bounds.
//!
//! For signs `q_S` and weights `w`, the effective sparsity is
//!
//! ```text
//! Γ² = ( max { q_Sᵀ(Df)_S − ‖(1 − w)(Df)_{−S}‖₁ : ‖f‖_n = 1 } )₊²,
//! ```
//!
//! bounded above by `n‖Dᵀq‖²₂` for any interpolating vector `q` with
//! `|q_j| ≤ 1 − w_j` off `S`, and by the closed form [`gamma_closed_form`].

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::active_set::ActiveSet;
use crate::banded::difference_lsq;
use crate::difference::{BlockDictionary, DiffOperator};
use crate::error::{Error, Result};
use crate::interpolants::{delta_k_energy, InterpolatingVector};
use crate::math;
use crate::theory;

/// Shipped constants `C_k`, `k = 1..4`, of [`gamma_closed_form`].
///
/// The ratio of the noisy interpolant energy to the closed form with `C_k = 1`
/// is largest for many equal segments without sign changes. For `k ≤ 2` it
/// peaks at short segments (≈ 2.56 and ≈ 80.6); for `k ≥ 3` it increases to the
/// log coefficient `2·4^{2k−1} ((2k−1)/2)_k²` of the no-change profile (7200 and
/// ≈ 1.411·10⁶). The shipped values round these up.
pub const SHIPPED_GAMMA_C_K: [f64; 4] = [3.0, 90.0, 7500.0, 1.5e6];

/// `w_j = ‖ψ_j^{−S}‖_n λ₀(u)/λ` on `𝒟 ∖ S̃`; zero on `S` and the mock rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Weights {
    pub u: f64,
    pub lambda: f64,
    pub lambda0: f64,
    /// Slice position `label − k − 1`.
    pub w: Vec<f64>,
}

impl Weights {
    pub fn new(dict: &BlockDictionary, active: &ActiveSet, lambda: f64, u: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: lambda,
            });
        }
        let (n, k) = (active.n(), active.k());
        let lambda0 = theory::lambda0(u, n, n - k - active.s())?;
        let mut w = vec![0.0; n - k];
        let nf = n as f64;
        for (label, sq) in dict.labels().iter().zip(dict.sq_norms()) {
            w[label - k - 1] = math::sqrt(sq / nf) * lambda0 / lambda;
        }
        Ok(Self {
            u,
            lambda,
            lambda0,
            w,
        })
    }

    pub fn max(&self) -> f64 {
        self.w.iter().fold(0.0, |m, v| m.max(*v))
    }
}

/// Smallest `c` with `|q_j| + ω_j / c ≤ 1` off `S`, where
/// `ω_j = ‖ψ_j^{−S}‖₂ (2/n_max)^{(2k−1)/2}` is the weight at `λ` equal to
/// the strengthened tuning rule with `c = 1`. Returns infinity if some
/// `|q_j| = 1` carries a positive weight.
pub fn required_c_k(v: &InterpolatingVector, dict: &BlockDictionary) -> f64 {
    let k = v.k;
    let p = (2 * k - 1) as f64 / 2.0;
    let scale = math::powf(2.0 / v.active.n_max() as f64, p);
    let mut worst = 0.0f64;
    for (label, sq) in dict.labels().iter().zip(dict.sq_norms()) {
        let omega = math::sqrt(sq) * scale;
        let room = 1.0 - math::abs(v.q[label - k - 1]);
        if omega == 0.0 {
            continue;
        }
        if room <= 0.0 {
            return f64::INFINITY;
        }
        worst = worst.max(omega / room);
    }
    worst
}

/// Upper bound `n‖Dᵀq‖²₂` on `Γ²`. Fails if `q` does not interpolate its
/// signs or breaks its caps by more than `tol`.
pub fn via_interpolant(v: &InterpolatingVector, tol: f64) -> Result<f64> {
    if !v.interpolates() {
        return Err(Error::InvalidActiveSet(
            "interpolating vector does not match its signs".into(),
        ));
    }
    v.check_feasible(tol)?;
    delta_k_energy(v)
}

/// `n C_k (Σ_{S±} (1 + log n_i)/n_i^{2k−1} + Σ_{others} (1 + log n_i)/n_max^{2k−1})`.
pub fn gamma_closed_form(active: &ActiveSet, c_big: f64) -> f64 {
    let k = active.k();
    let e = 2 * k - 1;
    let lens = active.segment_lengths();
    let n_max = active.n_max() as f64;
    let sum: f64 = lens
        .iter()
        .zip(active.sign_change_segments())
        .map(|(&len, pm)| {
            let nf = len as f64;
            let den = if pm { nf } else { n_max };
            (1.0 + math::ln(nf)) / math::powi(den, e)
        })
        .sum();
    active.n() as f64 * c_big * sum
}

pub fn shipped_gamma_c_k(k: usize) -> Result<f64> {
    if !(1..=4).contains(&k) {
        return Err(Error::UnsupportedOrder { k });
    }
    Ok(SHIPPED_GAMMA_C_K[k - 1])
}

/// Settings of the direct effective-sparsity oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectConfig {
    pub restarts: usize,
    pub max_iter: usize,
    /// Step `step·√n / √t` along the normalized supergradient.
    pub step: f64,
    /// Face polishing happens every this many iterations.
    pub polish_every: usize,
    pub seed: u64,
    /// Largest `n` accepted.
    pub max_n: usize,
}

impl Default for DirectConfig {
    fn default() -> Self {
        Self {
            restarts: 50,
            max_iter: 10_000,
            step: 0.5,
            polish_every: 200,
            seed: 0,
            max_n: 64,
        }
    }
}

/// Outcome of the direct oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectResult {
    /// `(max)₊²`.
    pub gamma_sq: f64,
    /// Best objective value over the sphere `‖f‖_n = 1`.
    pub value: f64,
    /// Best value of each restart.
    pub restart_values: Vec<f64>,
    /// `(best − median)/|best|` over restarts.
    pub spread: f64,
    /// `spread ≤ 1e−4`.
    pub certified: bool,
    /// `spread ≤ 1e−3`; otherwise the value is flagged unreliable.
    pub reliable: bool,
    pub iterations: usize,
    /// Maximizer with `‖f‖_n = 1`.
    pub argmax: Vec<f64>,
}

struct Objective<'a> {
    op: &'a DiffOperator,
    /// `q_j` on `S`, 0 elsewhere.
    q: Vec<f64>,
    /// `1 − w_j` off `S`, 0 on `S`.
    cap: Vec<f64>,
    in_s: Vec<bool>,
}

impl Objective<'_> {
    fn value(&self, df: &[f64]) -> f64 {
        df.iter()
            .enumerate()
            .map(|(r, d)| {
                if self.in_s[r] {
                    self.q[r] * d
                } else {
                    -self.cap[r] * math::abs(*d)
                }
            })
            .sum()
    }

    fn supergradient_dual(&self, df: &[f64]) -> Vec<f64> {
        df.iter()
            .enumerate()
            .map(|(r, d)| {
                if self.in_s[r] {
                    self.q[r]
                } else {
                    -self.cap[r] * math::signum(*d)
                }
            })
            .collect()
    }

    /// Face refinement by a primal active-set method on the dual problem
    /// `min ‖Dᵀz‖₂` over `z_S = q_S`, `|z_j| ≤ 1 − w_j`, started with every
    /// row where `df` is nonzero at its bound `−(1 − w_j) sign(df_j)`.
    ///
    /// Each step solves for the rows off their bounds with the others held,
    /// moves towards that solution until a bound blocks, and at the solution
    /// releases the bound whose multiplier has the wrong sign by the most.
    /// Every iterate `z` gives the candidate `f ∝ Dᵀz`, scored by the true
    /// objective. Returns the best candidate, its value and whether the
    /// final iterate satisfied the optimality conditions.
    fn refine(&self, df: &[f64], radius: f64, max_steps: usize) -> Option<(Vec<f64>, f64, bool)> {
        let n = self.op.n();
        let m = df.len();
        let thr = 1e-9 * math::max_abs(df);
        let mut z: Vec<f64> = (0..m)
            .map(|r| {
                if self.in_s[r] {
                    self.q[r]
                } else if math::abs(df[r]) > thr {
                    -self.cap[r] * math::signum(df[r])
                } else {
                    0.0
                }
            })
            .collect();
        let mut bound: Vec<bool> = (0..m)
            .map(|r| !self.in_s[r] && math::abs(df[r]) > thr)
            .collect();
        let mut best: Option<(Vec<f64>, f64)> = None;
        let mut optimal = false;
        for _ in 0..max_steps {
            let free: Vec<usize> = (0..m).filter(|&r| !self.in_s[r] && !bound[r]).collect();
            let mut held = z.clone();
            for &r in &free {
                held[r] = 0.0;
            }
            let g = self.op.apply_transpose(&held);
            let target: Vec<f64> = if free.is_empty() {
                Vec::new()
            } else {
                difference_lsq(self.op.coefficients(), n, &free, &g)
                    .ok()?
                    .iter()
                    .map(|v| -v)
                    .collect()
            };
            let mut alpha = 1.0;
            let mut blocking = None;
            for (p, &r) in free.iter().enumerate() {
                let d = target[p] - z[r];
                if d == 0.0 {
                    continue;
                }
                let room = if d > 0.0 { self.cap[r] - z[r] } else { -self.cap[r] - z[r] };
                let a = (room / d).max(0.0);
                if a < alpha {
                    alpha = a;
                    blocking = Some(r);
                }
            }
            for (p, &r) in free.iter().enumerate() {
                z[r] += alpha * (target[p] - z[r]);
            }
            let h = self.op.apply_transpose(&z);
            let norm = math::norm2(&h);
            if !(norm > 0.0) || !norm.is_finite() {
                return None;
            }
            let f: Vec<f64> = h.iter().map(|x| x * radius / norm).collect();
            let val = self.value(&self.op.apply(&f));
            if best.as_ref().is_none_or(|b| val > b.1) {
                best = Some((f, val));
            }
            if let Some(r) = blocking {
                z[r] = if z[r] > 0.0 { self.cap[r] } else { -self.cap[r] };
                bound[r] = true;
                continue;
            }
            let grad = self.op.apply(&h);
            let scale = math::max_abs(&grad).max(1e-300);
            let mut worst = (1e-11, None);
            for r in 0..m {
                if bound[r] {
                    let bad = math::signum(z[r]) * grad[r] / scale;
                    if bad > worst.0 {
                        worst = (bad, Some(r));
                    }
                }
            }
            match worst.1 {
                Some(r) => bound[r] = false,
                None => {
                    optimal = true;
                    break;
                }
            }
        }
        best.map(|(f, v)| (f, v, optimal))
    }
}

fn project_ball(f: &mut [f64], radius: f64) {
    let norm = math::norm2(f);
    if norm > radius {
        for x in f.iter_mut() {
            *x *= radius / norm;
        }
    }
}

/// Direct effective sparsity by projected supergradient ascent on the ball
/// `‖f‖_n ≤ 1`, with restarts from random directions.
///
/// The objective is concave and positively homogeneous, so when the maximum
/// is positive it is attained on the sphere. Every `polish_every` iterations
/// the current sign pattern of `Df` is frozen and the objective, linear on
/// that face, is maximized exactly; the polished point is kept only if it
/// scores higher. A restart stops early once polishing stops improving.
/// `weights` of `None` gives the noiseless case.
pub fn direct(
    active: &ActiveSet,
    weights: Option<&[f64]>,
    cfg: &DirectConfig,
) -> Result<DirectResult> {
    let (n, k) = (active.n(), active.k());
    if n > cfg.max_n {
        return Err(Error::DenseCapExceeded { n, cap: cfg.max_n });
    }
    let op = DiffOperator::new(n, k)?;
    let m = op.rows();
    if let Some(w) = weights {
        if w.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: w.len(),
            });
        }
    }
    let mut q = vec![0.0; m];
    let mut in_s = vec![false; m];
    for (&t, &s) in active.knots().iter().zip(active.signs()) {
        q[t - k - 1] = s as f64;
        in_s[t - k - 1] = true;
    }
    let cap: Vec<f64> = (0..m)
        .map(|r| {
            if in_s[r] {
                0.0
            } else {
                1.0 - weights.map_or(0.0, |w| w[r])
            }
        })
        .collect();
    let obj = Objective {
        op: &op,
        q,
        cap,
        in_s,
    };
    let radius = math::sqrt(n as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut restart_values = Vec::with_capacity(cfg.restarts);
    let mut best_f = vec![0.0; n];
    let mut best = f64::NEG_INFINITY;
    let mut iterations = 0;
    for _ in 0..cfg.restarts.max(1) {
        let mut f: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = math::norm2(&f);
        for x in f.iter_mut() {
            *x *= radius / norm;
        }
        let mut local_best = obj.value(&op.apply(&f));
        let mut local_f = f.clone();
        let mut last_polish = f64::NEG_INFINITY;
        let mut stale = 0;
        for t in 1..=cfg.max_iter {
            iterations += 1;
            let df = op.apply(&f);
            let val = obj.value(&df);
            if val > local_best {
                local_best = val;
                local_f.copy_from_slice(&f);
            }
            if t % cfg.polish_every == 0 {
                if let Some((pf, pv, optimal)) = obj.refine(&df, radius, 20 * m + 100) {
                    if pv > local_best {
                        local_best = pv;
                        local_f.copy_from_slice(&pf);
                    }
                    if optimal {
                        break;
                    }
                }
                if local_best <= last_polish + 1e-13 * math::abs(local_best) {
                    stale += 1;
                    if stale >= 3 {
                        break;
                    }
                } else {
                    stale = 0;
                }
                last_polish = local_best;
            }
            let z = obj.supergradient_dual(&df);
            let g = op.apply_transpose(&z);
            let gn = math::norm2(&g);
            if gn == 0.0 {
                break;
            }
            let eta = cfg.step * radius / math::sqrt(t as f64) / gn;
            for (x, gi) in f.iter_mut().zip(&g) {
                *x += eta * gi;
            }
            project_ball(&mut f, radius);
        }
        restart_values.push(local_best);
        if local_best > best {
            best = local_best;
            best_f = local_f;
        }
    }
    let mut sorted = restart_values.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = sorted[sorted.len() / 2];
    let spread = if best > 0.0 {
        (best - median) / best
    } else {
        0.0
    };
    let pos = best.max(0.0);
    let norm = math::norm2(&best_f);
    let argmax = if norm > 0.0 {
        best_f.iter().map(|x| x * radius / norm).collect()
    } else {
        best_f
    };
    Ok(DirectResult {
        gamma_sq: pos * pos,
        value: best,
        restart_values,
        spread,
        certified: spread <= 1e-4,
        reliable: spread <= 1e-3,
        iterations,
        argmax,
    })
}
