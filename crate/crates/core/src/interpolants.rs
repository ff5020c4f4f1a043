//! Interpolating vectors `q ∈ ℝ^{n−k}` for a sign pattern on `S`.
//!
//! Every segment of `S±` is filled from one antisymmetric profile
//! `P: [0, 1] → [−1, 1]` with `P(0) = 1`, `P(1) = −1`:
//!
//! * a sign change from `σ` to `−σ` uses `σ·P(j/n_i)`,
//! * the left boundary segment (from 0 to `σ`) uses `σ·(1 − P(j/n₁))/2`,
//! * the right boundary segment (from `σ` to 0) uses `σ·(1 + P(j/n_{s+1}))/2`.
//!
//! Near each end the profile is `1 − a₀ x^p` with `p = k` (noiseless) or
//! `p = (2k−1)/2` (noisy). For `k ≤ 2` the two end pieces meet at `x = 1/2`.
//! For `k ≥ 3` the unit interval is split into `N = k+2` (even `k`) or
//! `N = k+1` (odd `k`) pieces: polynomials of degree `k` in between, and an
//! odd polynomial in `(1/2 − x)` on the two pieces around the midpoint.
//! Coefficients come from matching `k − 1` derivatives at the breakpoints
//! ([`ContinuousProfile`]) or from matching values on `k` consecutive
//! integers per junction ([`solve_matching_coefficients`]).

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::active_set::ActiveSet;
use crate::difference::{row_coefficients, DiffOperator};
use crate::error::{Error, Result};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// `|q_j| ≤ 1` off `S`; end pieces use power `k`.
    Noiseless,
    /// `|q_j| ≤ 1 − w_j` off `S`; end pieces use power `(2k−1)/2`.
    Noisy,
}

impl Mode {
    pub fn exponent(self, k: usize) -> f64 {
        match self {
            Mode::Noiseless => k as f64,
            Mode::Noisy => (2 * k - 1) as f64 / 2.0,
        }
    }
}

/// How a profile is laid onto the integers of a segment.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// `t_{i−1} + j ↦ P(j/n_i)` with the continuous profile.
    #[default]
    Continuous,
    /// Per-segment coefficients from discrete value matching.
    Discrete,
}

/// Number of pieces the unit interval is split into.
pub fn subintervals(k: usize) -> usize {
    if k <= 2 {
        2
    } else if k % 2 == 0 {
        k + 2
    } else {
        k + 1
    }
}

/// A piecewise profile on `[0, 1]`, stored for `x ≤ 1/2` and extended by
/// `P(x) = −P(1 − x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Piecewise {
    k: usize,
    exponent: f64,
    n_sub: usize,
    /// Left-half junctions `x₁ < … < x_{N/2−1}`; empty when `N = 2`.
    breaks: Vec<f64>,
    a0: f64,
    /// Coefficients of `x^r`, `r = 0..=k`, one vector per interior piece.
    middle: Vec<Vec<f64>>,
    /// Coefficients of `(1/2 − x)^{2i+1}`.
    center: Vec<f64>,
}

/// Whether a piece is the end piece, an interior polynomial or the center.
#[derive(Clone, Copy)]
enum Piece {
    End,
    Middle(usize),
    Center,
}

fn center_powers(k: usize) -> usize {
    // odd powers up to k − 1 (even k) or k (odd k)
    if k % 2 == 0 {
        k / 2
    } else {
        k.div_ceil(2)
    }
}

/// `d^r/dx^r x^e` at `x`.
fn power_derivative(x: f64, e: f64, r: usize) -> f64 {
    let mut c = 1.0;
    for i in 0..r {
        c *= e - i as f64;
    }
    if c == 0.0 {
        return 0.0;
    }
    c * math::powf(x, e - r as f64)
}

impl Piecewise {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn subintervals(&self) -> usize {
        self.n_sub
    }

    /// `a₀` in `1 − a₀ x^p`.
    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn middle(&self) -> &[Vec<f64>] {
        &self.middle
    }

    /// Coefficients of `(1/2 − x)`, `(1/2 − x)³`, ….
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    fn piece_at(&self, x: f64) -> Piece {
        if self.breaks.is_empty() || x <= self.breaks[0] {
            return Piece::End;
        }
        let last = self.breaks.len() - 1;
        if x > self.breaks[last] {
            return Piece::Center;
        }
        let l = self.breaks.iter().position(|b| x <= *b).unwrap_or(last);
        Piece::Middle(l - 1)
    }

    fn eval_piece(&self, piece: Piece, x: f64, r: usize) -> f64 {
        match piece {
            Piece::End => {
                let base = if r == 0 { 1.0 } else { 0.0 };
                base - self.a0 * power_derivative(x, self.exponent, r)
            }
            Piece::Middle(l) => self.middle[l]
                .iter()
                .enumerate()
                .map(|(e, b)| b * power_derivative(x, e as f64, r))
                .sum(),
            Piece::Center => {
                let z = 0.5 - x;
                let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
                self.center
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c * sign * power_derivative(z, (2 * i + 1) as f64, r))
                    .sum()
            }
        }
    }

    /// `P(x)` for `x ∈ [0, 1]`.
    pub fn eval(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    /// `P^{(r)}(x)`; at a breakpoint the piece to its left is used.
    pub fn derivative(&self, x: f64, r: usize) -> f64 {
        if x > 0.5 {
            let sign = if r % 2 == 0 { -1.0 } else { 1.0 };
            return sign * self.derivative(1.0 - x, r);
        }
        self.eval_piece(self.piece_at(x), x, r)
    }

    /// Largest jump of `P^{(r)}`, `r < k`, across the left-half junctions.
    pub fn max_derivative_jump(&self) -> f64 {
        let mut worst = 0.0f64;
        let mut junctions: Vec<(f64, Piece, Piece)> = Vec::new();
        if self.breaks.is_empty() {
            junctions.push((0.5, Piece::End, Piece::End));
        } else {
            for (l, &x) in self.breaks.iter().enumerate() {
                let left = if l == 0 { Piece::End } else { Piece::Middle(l - 1) };
                let right = if l + 1 == self.breaks.len() {
                    Piece::Center
                } else {
                    Piece::Middle(l)
                };
                junctions.push((x, left, right));
            }
        }
        for (x, left, right) in junctions {
            for r in 0..self.k {
                let a = self.eval_piece(left, x, r);
                let b = match right {
                    // the mirrored end piece −(1 − a₀(1 − x)^p)
                    Piece::End => {
                        let sign = if r % 2 == 0 { -1.0 } else { 1.0 };
                        sign * self.eval_piece(Piece::End, 1.0 - x, r)
                    }
                    p => self.eval_piece(p, x, r),
                };
                worst = worst.max(math::abs(a - b));
            }
        }
        worst
    }

    /// Values `P(j/len)` for `j = 0..=len`.
    pub fn sample(&self, len: usize) -> Vec<f64> {
        (0..=len).map(|j| self.eval(j as f64 / len as f64)).collect()
    }

    /// Asymptotic constant `2 N^p / a₀` in the strengthened tuning rule.
    pub fn c_k(&self) -> f64 {
        2.0 * math::powf(self.n_sub as f64, self.exponent) / self.a0
    }
}

/// Unknowns `[a₀, b_{·,0..=k} per middle piece, center coefficients]`.
struct Layout {
    k: usize,
    exponent: f64,
    n_middle: usize,
    n_center: usize,
}

impl Layout {
    fn new(k: usize, exponent: f64, n_sub: usize) -> Self {
        Self {
            k,
            exponent,
            n_middle: n_sub / 2 - 2,
            n_center: center_powers(k),
        }
    }

    fn unknowns(&self) -> usize {
        1 + self.n_middle * (self.k + 1) + self.n_center
    }

    /// Linear form of `piece^{(r)}(x)`: constant part and row of coefficients.
    fn row(&self, piece: Piece, x: f64, r: usize) -> (f64, Vec<f64>) {
        let mut row = vec![0.0; self.unknowns()];
        let mut constant = 0.0;
        match piece {
            Piece::End => {
                if r == 0 {
                    constant = 1.0;
                }
                row[0] = -power_derivative(x, self.exponent, r);
            }
            Piece::Middle(l) => {
                let off = 1 + l * (self.k + 1);
                for e in 0..=self.k {
                    row[off + e] = power_derivative(x, e as f64, r);
                }
            }
            Piece::Center => {
                let off = 1 + self.n_middle * (self.k + 1);
                let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
                for i in 0..self.n_center {
                    row[off + i] = sign * power_derivative(0.5 - x, (2 * i + 1) as f64, r);
                }
            }
        }
        (constant, row)
    }

    /// Builds and solves the matching system. `points(l)` lists the
    /// `(x, r)` pairs at which pieces `l` and `l + 1` must agree.
    fn solve(&self, breaks: Vec<f64>, points: impl Fn(usize) -> Vec<(f64, usize)>) -> Result<Piecewise> {
        let dim = self.unknowns();
        let mut a = DMatrix::<f64>::zeros(dim, dim);
        let mut b = DVector::<f64>::zeros(dim);
        let mut eq = 0;
        let nj = breaks.len();
        for l in 0..nj {
            let left = if l == 0 { Piece::End } else { Piece::Middle(l - 1) };
            let right = if l + 1 == nj { Piece::Center } else { Piece::Middle(l) };
            for (x, r) in points(l) {
                let (c1, r1) = self.row(left, x, r);
                let (c2, r2) = self.row(right, x, r);
                for c in 0..dim {
                    a[(eq, c)] = r1[c] - r2[c];
                }
                b[eq] = c2 - c1;
                eq += 1;
            }
        }
        debug_assert_eq!(eq, dim);
        // column equilibration keeps the pivoting meaningful
        let mut scale = vec![1.0; dim];
        for (c, sc) in scale.iter_mut().enumerate() {
            let m = (0..dim).fold(0.0f64, |m, r| m.max(math::abs(a[(r, c)])));
            if m > 0.0 {
                *sc = m;
                for r in 0..dim {
                    a[(r, c)] /= m;
                }
            }
        }
        let lu = a.full_piv_lu();
        if !lu.is_invertible() {
            return Err(Error::Singular);
        }
        let sol = lu.solve(&b).ok_or(Error::Singular)?;
        let x: Vec<f64> = (0..dim).map(|i| sol[i] / scale[i]).collect();
        let off = 1 + self.n_middle * (self.k + 1);
        Ok(Piecewise {
            k: self.k,
            exponent: self.exponent,
            n_sub: 2 * (self.n_middle + 2),
            breaks,
            a0: x[0],
            middle: (0..self.n_middle)
                .map(|l| x[1 + l * (self.k + 1)..1 + (l + 1) * (self.k + 1)].to_vec())
                .collect(),
            center: x[off..].to_vec(),
        })
    }
}

/// Two end pieces meeting at `1/2`: `a₀ = 2^p`.
fn two_piece(k: usize, exponent: f64) -> Piecewise {
    Piecewise {
        k,
        exponent,
        n_sub: 2,
        breaks: Vec::new(),
        a0: math::powf(2.0, exponent),
        middle: Vec::new(),
        center: Vec::new(),
    }
}

/// The continuous profile with `k − 1` continuous derivatives.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuousProfile {
    pub mode: Mode,
    pub profile: Piecewise,
}

impl ContinuousProfile {
    /// Default profile: two pieces for `k ≤ 2`, the `N`-piece split otherwise.
    pub fn new(k: usize, mode: Mode) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidOrder { n: 0, k });
        }
        if k <= 2 {
            return Ok(Self {
                mode,
                profile: two_piece(k, mode.exponent(k)),
            });
        }
        Self::split(k, mode)
    }

    /// The `N`-piece split (`N = k+2` for even `k`, `k+1` for odd `k`)
    /// for every `k ≥ 2`; for `k = 1` this is the two-piece profile.
    pub fn split(k: usize, mode: Mode) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidOrder { n: 0, k });
        }
        let p = mode.exponent(k);
        let n_sub = if k % 2 == 0 { k + 2 } else { k + 1 };
        if n_sub == 2 {
            return Ok(Self {
                mode,
                profile: two_piece(k, p),
            });
        }
        let breaks: Vec<f64> = (1..n_sub / 2).map(|l| l as f64 / n_sub as f64).collect();
        let layout = Layout::new(k, p, n_sub);
        let bx = breaks.clone();
        let profile = layout.solve(breaks, |l| (0..k).map(|r| (bx[l], r)).collect())?;
        Ok(Self { mode, profile })
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.profile.eval(x)
    }

    /// Checks `P` is nonincreasing on a grid of `samples + 1` points.
    pub fn is_decreasing(&self, samples: usize) -> bool {
        let v = self.profile.sample(samples);
        v.windows(2).all(|w| w[1] <= w[0] + 1e-13)
    }
}

/// Discrete matching for a segment of length `len` (even), junctions at
/// `⌊l·len/N⌋`; pieces agree on `k` consecutive integers from each junction.
fn discrete_profile(k: usize, exponent: f64, len: usize) -> Result<Piecewise> {
    let n_sub = subintervals(k);
    if n_sub == 2 {
        return Ok(two_piece(k, exponent));
    }
    let junctions: Vec<usize> = (1..n_sub / 2).map(|l| l * len / n_sub).collect();
    let lf = len as f64;
    let breaks: Vec<f64> = junctions.iter().map(|j| *j as f64 / lf).collect();
    let layout = Layout::new(k, exponent, n_sub);
    layout.solve(breaks, |l| {
        (0..k).map(|r| ((junctions[l] + r) as f64 / lf, 0)).collect()
    })
}

/// Result of discrete value matching on a segment of length `N·d`.
///
/// The profile is stored on the unit interval; [`Self::scaled`] rescales it
/// to the sub-interval variable `y = j/d ∈ [0, N]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchingCoefficients {
    pub d: usize,
    pub profile: Piecewise,
}

/// Coefficients in `y = j/d`: `1 − a₀ y^p` on `[0, 1]`, polynomials
/// `Σ b_r y^r` on the interior pieces, `Σ c_i (N/2 − y)^{2i+1}` at the center.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaledCoefficients {
    pub a0: f64,
    pub middle: Vec<Vec<f64>>,
    pub center: Vec<f64>,
}

impl MatchingCoefficients {
    pub fn scaled(&self) -> ScaledCoefficients {
        let nf = self.profile.n_sub as f64;
        ScaledCoefficients {
            a0: self.profile.a0 / math::powf(nf, self.profile.exponent),
            middle: self
                .profile
                .middle
                .iter()
                .map(|b| {
                    b.iter()
                        .enumerate()
                        .map(|(r, v)| v / math::powi(nf, r))
                        .collect()
                })
                .collect(),
            center: self
                .profile
                .center
                .iter()
                .enumerate()
                .map(|(i, v)| v / math::powi(nf, 2 * i + 1))
                .collect(),
        }
    }

    /// Values on `j = 0..=N·d`.
    pub fn values(&self) -> Vec<f64> {
        let len = self.profile.n_sub * self.d;
        discrete_values(&self.profile, len)
    }

    /// Largest `|Δ(l) left − Δ(l) right|`, `l < k`, over the junctions, with
    /// both pieces evaluated on the `k` matching points.
    pub fn junction_mismatch(&self) -> f64 {
        let pw = &self.profile;
        let len = (pw.n_sub * self.d) as f64;
        let mut worst = 0.0f64;
        let nj = pw.breaks.len();
        for l in 0..nj {
            let left = if l == 0 { Piece::End } else { Piece::Middle(l - 1) };
            let right = if l + 1 == nj { Piece::Center } else { Piece::Middle(l) };
            let j0 = math::round(pw.breaks[l] * len) as usize;
            let lv: Vec<f64> = (0..pw.k)
                .map(|r| pw.eval_piece(left, (j0 + r) as f64 / len, 0))
                .collect();
            let rv: Vec<f64> = (0..pw.k)
                .map(|r| pw.eval_piece(right, (j0 + r) as f64 / len, 0))
                .collect();
            for order in 0..pw.k {
                let coef = row_coefficients_or_identity(order);
                let a: f64 = (0..=order).map(|c| coef[c] * lv[c]).sum();
                let b: f64 = (0..=order).map(|c| coef[c] * rv[c]).sum();
                worst = worst.max(math::abs(a - b));
            }
        }
        worst
    }
}

fn row_coefficients_or_identity(order: usize) -> Vec<f64> {
    if order == 0 {
        vec![1.0]
    } else {
        row_coefficients(order)
    }
}

/// Discrete matching coefficients for the noisy profile of order `k` on a
/// segment of `N` sub-intervals of length `d`.
pub fn solve_matching_coefficients(k: usize, d: usize) -> Result<MatchingCoefficients> {
    if k == 0 {
        return Err(Error::InvalidOrder { n: d, k });
    }
    if d < k {
        return Err(Error::InvalidParameter {
            name: "d",
            value: d as f64,
        });
    }
    let len = subintervals(k) * d;
    let profile = discrete_profile(k, Mode::Noisy.exponent(k), len)?;
    Ok(MatchingCoefficients { d, profile })
}

/// Closed-form discrete matching for `k = 3`: returns `(ā₀, ā₁, ā₃)` with
/// `q_j = 1 − ā₀ (j/d)^{5/2}` and `p_j = −ā₃ ((2d−j)/d)³ + ā₁ (2d−j)/d`.
pub fn cubic_matching_closed_form(d: usize) -> (f64, f64, f64) {
    let df = d as f64;
    let f = |x: f64| math::powf(x, 2.5);
    let c = |x: f64| x * x * x;
    let alpha1 = (f(df + 1.0) - f(df)) / math::powf(df, 1.5);
    let gamma1 = (c(df) - c(df - 1.0)) / (df * df);
    let alpha2 = (f(df + 2.0) - 2.0 * f(df + 1.0) + f(df)) / math::sqrt(df);
    let gamma2 = (c(df) - 2.0 * c(df - 1.0) + c(df - 2.0)) / df;
    let cross = gamma1 * alpha2 + alpha1 * gamma2;
    let den = gamma2 - alpha2 + cross;
    (gamma2 / den, cross / den, alpha2 / den)
}

fn discrete_values(pw: &Piecewise, len: usize) -> Vec<f64> {
    pw.sample(len)
}

/// Profile values `P_j`, `j = 0..=len`, for one segment. Odd lengths with
/// `k ≥ 2` repeat the left end value once and use length `len − 1`.
fn segment_profile(
    k: usize,
    mode: Mode,
    construction: Construction,
    len: usize,
    continuous: &Piecewise,
    cache: &mut BTreeMap<usize, Piecewise>,
) -> Result<Vec<f64>> {
    let shift = k >= 2 && len % 2 == 1;
    let l = if shift { len - 1 } else { len };
    let base = match construction {
        Construction::Continuous => continuous.sample(l),
        Construction::Discrete => {
            if !cache.contains_key(&l) {
                cache.insert(l, discrete_profile(k, mode.exponent(k), l)?);
            }
            cache[&l].sample(l)
        }
    };
    if shift {
        let mut v = Vec::with_capacity(len + 1);
        v.push(base[0]);
        v.extend_from_slice(&base);
        Ok(v)
    } else {
        Ok(base)
    }
}

/// An interpolating vector on `𝒟 = [k+1 : n]` with per-entry caps.
#[derive(Debug, Clone, Serialize)]
pub struct InterpolatingVector {
    pub k: usize,
    pub mode: Mode,
    pub construction: Construction,
    pub active: ActiveSet,
    /// `q`, slice position `label − k − 1`.
    pub q: Vec<f64>,
    /// `1 − w_j` (1 in the noiseless mode and on `S`).
    pub caps: Vec<f64>,
}

impl InterpolatingVector {
    pub fn n(&self) -> usize {
        self.active.n()
    }

    pub fn value(&self, label: usize) -> f64 {
        self.q[label - self.k - 1]
    }

    /// `1 − w_j − |q_j|`, and 0 on `S`.
    pub fn slack(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self
            .q
            .iter()
            .zip(&self.caps)
            .map(|(q, c)| c - math::abs(*q))
            .collect();
        for &t in self.active.knots() {
            s[t - self.k - 1] = 0.0;
        }
        s
    }

    /// `q_{t_i} = q_S,i` exactly.
    pub fn interpolates(&self) -> bool {
        self.active
            .knots()
            .iter()
            .zip(self.active.signs())
            .all(|(&t, &sg)| self.value(t) == sg as f64)
    }

    /// Fails with the worst violated entries (labels and amounts) when
    /// `|q_j| > 1 − w_j + tol` somewhere off `S`.
    pub fn check_feasible(&self, tol: f64) -> Result<()> {
        let mut bad: Vec<(usize, f64)> = self
            .slack()
            .iter()
            .enumerate()
            .filter(|(_, s)| **s < -tol)
            .map(|(r, s)| (r + self.k + 1, -s))
            .collect();
        if bad.is_empty() {
            return Ok(());
        }
        let count = bad.len();
        bad.sort_by(|a, b| b.1.total_cmp(&a.1));
        bad.truncate(5);
        Err(Error::Infeasible { count, worst: bad })
    }

    /// `q` extended by the sentinel zeros: positions `t₀ = k … t_{s+1} = n+1`.
    fn extended(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.q.len() + 2);
        v.push(0.0);
        v.extend_from_slice(&self.q);
        v.push(0.0);
        v
    }
}

/// Builds an interpolating vector. `weights` (length `n − k`) only feed the
/// caps `1 − w_j`; the construction itself depends on `S`, `k` and `mode`.
pub fn build(
    active: &ActiveSet,
    mode: Mode,
    construction: Construction,
    weights: Option<&[f64]>,
) -> Result<InterpolatingVector> {
    let (n, k) = (active.n(), active.k());
    let m = n - k;
    if let Some(w) = weights {
        if w.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: w.len(),
            });
        }
    }
    let p = mode.exponent(k);
    let continuous = ContinuousProfile::new(k, mode)?.profile;
    let mut cache = BTreeMap::new();
    let bounds = active.boundaries();
    let lens = active.segment_lengths();
    let pm = active.sign_change_segments();
    let signs = active.signs();
    let s = active.s();
    let n_max = active.n_max() as f64;
    let mut q = vec![0.0; m];
    for (&t, &sg) in active.knots().iter().zip(signs) {
        q[t - k - 1] = sg as f64;
    }
    if s > 0 {
        for i in 1..=s + 1 {
            let a = bounds[i - 1];
            let len = lens[i - 1];
            let vl = if i == 1 { 0.0 } else { signs[i - 2] as f64 };
            let vr = if i == s + 1 { 0.0 } else { signs[i - 1] as f64 };
            if !pm[i - 1] {
                for j in 1..len {
                    q[a + j - k - 1] = match mode {
                        Mode::Noiseless => vl,
                        Mode::Noisy => {
                            let r = 4.0 * (j * (len - j)) as f64 / (len as f64 * n_max);
                            vl * (1.0 - math::powf(r, p))
                        }
                    };
                }
                continue;
            }
            let prof = segment_profile(k, mode, construction, len, &continuous, &mut cache)?;
            for j in 1..len {
                q[a + j - k - 1] = if i == 1 {
                    vr * (1.0 - prof[j]) / 2.0
                } else if i == s + 1 {
                    vl * (1.0 + prof[j]) / 2.0
                } else {
                    vl * prof[j]
                };
            }
        }
    }
    let mut caps = match weights {
        Some(w) => w.iter().map(|w| 1.0 - w).collect(),
        None => vec![1.0; m],
    };
    for &t in active.knots() {
        caps[t - k - 1] = 1.0;
    }
    Ok(InterpolatingVector {
        k,
        mode,
        construction,
        active: active.clone(),
        q,
        caps,
    })
}

/// Noiseless interpolation: piecewise degree-`k` profiles on `S±`, constant
/// between equal signs.
pub fn build_noiseless(active: &ActiveSet) -> Result<InterpolatingVector> {
    build(active, Mode::Noiseless, Construction::Continuous, None)
}

/// Noisy interpolation for `k ≤ 4` with caps `1 − w_j`. Requires
/// `n_i ≥ k(k+2)` on every `S±` segment.
pub fn build_noisy(
    active: &ActiveSet,
    weights: &[f64],
    construction: Construction,
) -> Result<InterpolatingVector> {
    let k = active.k();
    if k > 4 {
        return Err(Error::UnsupportedOrder { k });
    }
    if active.s() > 0 {
        active.check_min_length(k * (k + 2))?;
    }
    build(active, Mode::Noisy, construction, Some(weights))
}

/// Monotonicity of `q` over one `S±` segment, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentMonotonicity {
    pub segment: usize,
    pub monotone: bool,
    /// Largest step against the direction of travel.
    pub max_violation: f64,
}

pub fn check_monotone(v: &InterpolatingVector) -> Vec<SegmentMonotonicity> {
    let ext = v.extended();
    let bounds = v.active.boundaries();
    let k = v.k;
    v.active
        .sign_change_segments()
        .into_iter()
        .enumerate()
        .filter(|(_, pm)| *pm)
        .map(|(idx, _)| {
            let (a, b) = (bounds[idx], bounds[idx + 1]);
            let seg = &ext[a - k..=b - k];
            let dir = math::signum(seg[seg.len() - 1] - seg[0]);
            let worst = seg
                .windows(2)
                .map(|w| if dir == 0.0 { math::abs(w[1] - w[0]) } else { -dir * (w[1] - w[0]) })
                .fold(0.0f64, f64::max);
            SegmentMonotonicity {
                segment: idx + 1,
                monotone: worst <= 1e-12,
                max_violation: worst,
            }
        })
        .collect()
}

/// `n ‖Δ(k)′ q‖²₂`.
pub fn delta_k_energy(v: &InterpolatingVector) -> Result<f64> {
    let op = DiffOperator::new(v.n(), v.k)?;
    let dq = op.apply_transpose(&v.q);
    Ok(v.n() as f64 * dq.iter().map(|x| x * x).sum::<f64>())
}

/// `Σ_l (−1)^l C(k,l) (j − l)^e` for `j ≥ k`, accurate even when the result
/// is many orders of magnitude below `j^e`.
pub fn power_difference(k: usize, e: f64, j: usize) -> f64 {
    let coef = row_coefficients(k);
    if j < 2 * k {
        // coef[c] multiplies f_{j−k+c}
        return (0..=k)
            .map(|c| coef[c] * math::powf((j - k + c) as f64, e))
            .sum();
    }
    // Σ_l (−1)^l C(k,l) (1 − l/j)^e = Σ_{m≥k} C(e,m) (−1/j)^m (−1)^k k! S(m,k)
    let jf = j as f64;
    let mut stirling = vec![0.0f64; k + 1];
    stirling[0] = 1.0;
    let mut kfact = 1.0;
    for i in 1..=k {
        kfact *= i as f64;
    }
    let mut binom = 1.0;
    let mut pw = 1.0;
    let mut sum = 0.0;
    for m in 1..400usize {
        // S(m, ·) from S(m−1, ·)
        for r in (1..=k).rev() {
            stirling[r] = r as f64 * stirling[r] + stirling[r - 1];
        }
        stirling[0] = 0.0;
        binom *= (e - (m - 1) as f64) / m as f64;
        pw *= -1.0 / jf;
        if m < k {
            continue;
        }
        let term = binom * pw * stirling[k];
        sum += term;
        if math::abs(term) <= 1e-18 * math::abs(sum) {
            break;
        }
    }
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    math::powf(jf, e) * sign * kfact * sum
}

/// `Σ_{j=k}^{d} (Δ(k) j^{(2k−1)/2})²`.
pub fn power_sequence_energy(k: usize, d: usize) -> f64 {
    let e = (2 * k - 1) as f64 / 2.0;
    (k..=d)
        .map(|j| {
            let v = power_difference(k, e, j);
            v * v
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_difference_matches_direct_sum_where_safe() {
        for k in 1..=4 {
            for j in [2 * k, 2 * k + 3, 40, 200] {
                let e = (2 * k - 1) as f64 / 2.0;
                let coef = row_coefficients(k);
                let direct: f64 = (0..=k)
                    .map(|c| coef[c] * math::powf((j - k + c) as f64, e))
                    .sum();
                let fast = power_difference(k, e, j);
                // rounding in the alternating sum grows like 2^k j^e ε
                let slack = 1e-14 * math::powi(2.0, k) * math::powf(j as f64, e);
                assert!(
                    math::abs(fast - direct) <= 1e-9 * math::abs(direct) + slack,
                    "k={k} j={j}: {fast} vs {direct}"
                );
            }
        }
    }

    #[test]
    fn two_piece_profiles() {
        let p = ContinuousProfile::new(1, Mode::Noisy).unwrap();
        assert!((p.eval(0.125) - (1.0 - math::sqrt(0.25))).abs() < 1e-15);
        let p = ContinuousProfile::new(2, Mode::Noisy).unwrap();
        assert!((p.eval(0.25) - (1.0 - math::powf(0.5, 1.5))).abs() < 1e-15);
        assert!(p.profile.max_derivative_jump() < 1e-12);
    }
}
