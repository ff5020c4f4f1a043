//! Banded linear algebra: symmetric banded Cholesky and a Givens least-squares
//! solver for row subsets of a difference operator.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Symmetric positive definite matrix stored by its lower band.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSym {
    n: usize,
    bw: usize,
    // data[i * (bw + 1) + d] = A[i][i - d]
    data: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[i * (self.bw + 1) + (i - j)]
        }
    }

    /// Adds `v` to entries `(i, j)` and `(j, i)`.
    ///
    /// # Panics
    /// If `(i, j)` lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bw, "entry outside band");
        self.data[i * (self.bw + 1) + (i - j)] += v;
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for i in 0..self.n {
            self.data[i * (self.bw + 1)] += v;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..=i {
                let a = self.data[i * (self.bw + 1) + (i - j)];
                y[i] += a * x[j];
                if j != i {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    pub fn cholesky(&self) -> Result<BandedCholesky> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        let mut l = vec![0.0; n * w];
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let mut acc = self.data[i * w + (i - j)];
                let plo = lo.max(j.saturating_sub(bw));
                for p in plo..j {
                    acc -= l[i * w + (i - p)] * l[j * w + (j - p)];
                }
                if j == i {
                    if !(acc > 0.0) || !acc.is_finite() {
                        return Err(Error::Singular);
                    }
                    l[i * w] = math::sqrt(acc);
                } else {
                    l[i * w + (i - j)] = acc / l[j * w];
                }
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }
}

/// Lower Cholesky factor of a [`BandedSym`].
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        for i in 0..n {
            let mut acc = b[i];
            for p in i.saturating_sub(bw)..i {
                acc -= self.l[i * w + (i - p)] * b[p];
            }
            b[i] = acc / self.l[i * w];
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for p in (i + 1)..n.min(i + bw + 1) {
                acc -= self.l[p * w + (p - i)] * b[p];
            }
            b[i] = acc / self.l[i * w];
        }
    }
}

/// Least squares `min_v ‖g − A v‖₂` where `A = D_Rᵀ` and `D_R` keeps the rows
/// `rows` (sorted, 0-based) of the difference operator whose rows are the
/// coefficients `coef` placed at columns `r, …, r + k`.
///
/// Solved by streaming Givens rotations into a banded triangular factor, so
/// the conditioning is that of `A`, not of `AᵀA`. Returns `v`.
pub fn difference_lsq(coef: &[f64], n: usize, rows: &[usize], g: &[f64]) -> Result<Vec<f64>> {
    let f = rows.len();
    if g.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: g.len(),
        });
    }
    if f == 0 {
        return Ok(Vec::new());
    }
    let k = coef.len() - 1;
    let w = k + 1;
    let mut r = vec![0.0; f * w];
    let mut d = vec![0.0; f];
    let mut filled = vec![false; f];
    let mut row = vec![0.0; f + w];

    let mut p_lo = 0usize;
    for i in 0..n {
        while p_lo < f && rows[p_lo] + k < i {
            p_lo += 1;
        }
        let mut p_hi = p_lo;
        while p_hi < f && rows[p_hi] <= i {
            p_hi += 1;
        }
        if p_lo == p_hi {
            continue;
        }
        let mut last = p_hi - 1;
        for p in p_lo..p_hi {
            row[p] = coef[i - rows[p]];
        }
        let mut beta = g[i];
        let mut p = p_lo;
        while p <= last && p < f {
            let x = row[p];
            if x == 0.0 {
                p += 1;
                continue;
            }
            if !filled[p] {
                for dd in 0..w {
                    if p + dd < f {
                        r[p * w + dd] = row[p + dd];
                    }
                }
                d[p] = beta;
                filled[p] = true;
                for q in p..=last {
                    row[q] = 0.0;
                }
                last = 0;
                break;
            }
            let a = r[p * w];
            let h = libm::hypot(a, x);
            let (c, s) = (a / h, x / h);
            for dd in 0..w {
                if p + dd >= f {
                    break;
                }
                let rv = r[p * w + dd];
                let xv = row[p + dd];
                r[p * w + dd] = c * rv + s * xv;
                row[p + dd] = -s * rv + c * xv;
            }
            row[p] = 0.0;
            let dv = d[p];
            d[p] = c * dv + s * beta;
            beta = -s * dv + c * beta;
            last = last.max((p + k).min(f - 1));
            p += 1;
        }
        for q in p_lo..(last + 1).min(f) {
            row[q] = 0.0;
        }
    }

    let mut v = vec![0.0; f];
    let scale = (0..f).fold(0.0f64, |m, p| m.max(math::abs(r[p * w])));
    for p in (0..f).rev() {
        let diag = r[p * w];
        if !filled[p] || math::abs(diag) <= scale * 1e-15 {
            return Err(Error::Singular);
        }
        let mut acc = d[p];
        for dd in 1..w {
            if p + dd < f {
                acc -= r[p * w + dd] * v[p + dd];
            }
        }
        v[p] = acc / diag;
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_tridiagonal() {
        let n = 6;
        let mut a = BandedSym::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 4.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
        }
        let x: Vec<f64> = (0..n).map(|i| i as f64 - 2.5).collect();
        let mut b = a.mul_vec(&x);
        a.cholesky().unwrap().solve_in_place(&mut b);
        for i in 0..n {
            assert!((b[i] - x[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = BandedSym::zeros(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(1, 0, 2.0);
        assert_eq!(a.cholesky().unwrap_err(), Error::Singular);
    }

    #[test]
    fn lsq_matches_normal_equations() {
        // second differences, rows {0, 2, 3} of a 7-point operator
        let coef = [1.0, -2.0, 1.0];
        let n = 7;
        let rows = [0usize, 2, 3];
        let g = [0.3, -1.0, 2.0, 0.5, -0.7, 1.1, 0.2];
        let v = difference_lsq(&coef, n, &rows, &g).unwrap();
        // residual must be orthogonal to every kept row
        let mut res = g.to_vec();
        for (p, &rw) in rows.iter().enumerate() {
            for c in 0..3 {
                res[rw + c] -= coef[c] * v[p];
            }
        }
        for &rw in &rows {
            let ip: f64 = (0..3).map(|c| coef[c] * res[rw + c]).sum();
            assert!(ip.abs() < 1e-13, "{ip}");
        }
    }
}
