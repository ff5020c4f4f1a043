//! The difference operator `Δ(k)`, the falling factorial basis, the columns of
//! the Moore–Penrose pseudo-inverse `Δ(k)⁺`, and the block dictionary `Ψ^{−S}`.
//!
//! Sign convention: row label `i ∈ [k+1 : n]` computes
//! `Σ_{l=0}^{k} (−1)^l C(k, l) f_{i−l}`, so `Δ(1) f = (f₂ − f₁, f₃ − f₂, …)`.
//! Norms never depend on the global row sign.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::active_set::ActiveSet;
use crate::banded::BandedSym;
use crate::error::{Error, Result};
use crate::math;

/// Default cap on dense materializations (`n` columns / rows).
pub const DEFAULT_DENSE_CAP: usize = 4096;

/// `Δ(k) ∈ ℝ^{(n−k)×n}` in banded form.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffOperator {
    n: usize,
    k: usize,
    coef: Vec<f64>,
}

impl DiffOperator {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k >= n {
            return Err(Error::InvalidOrder { n, k });
        }
        Ok(Self {
            n,
            k,
            coef: row_coefficients(k),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of rows `m = n − k`.
    pub fn rows(&self) -> usize {
        self.n - self.k
    }

    /// Coefficients of row `r` at columns `r, …, r + k` (0-based).
    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        assert_eq!(f.len(), self.n, "signal length");
        (0..self.rows())
            .map(|r| {
                self.coef
                    .iter()
                    .enumerate()
                    .map(|(c, a)| a * f[r + c])
                    .sum()
            })
            .collect()
    }

    pub fn apply_transpose(&self, q: &[f64]) -> Vec<f64> {
        assert_eq!(q.len(), self.rows(), "dual length");
        let mut out = vec![0.0; self.n];
        for (r, qr) in q.iter().enumerate() {
            if *qr != 0.0 {
                for (c, a) in self.coef.iter().enumerate() {
                    out[r + c] += a * qr;
                }
            }
        }
        out
    }

    /// `Δ(k)ᵀΔ(k)`, an `n × n` matrix of half-bandwidth `k`.
    pub fn normal_matrix(&self) -> BandedSym {
        let mut m = BandedSym::zeros(self.n, self.k);
        for r in 0..self.rows() {
            for a in 0..=self.k {
                for b in 0..=a {
                    m.add(r + a, r + b, self.coef[a] * self.coef[b]);
                }
            }
        }
        m
    }

    /// `Δ(k)Δ(k)ᵀ`, an `(n−k) × (n−k)` matrix of half-bandwidth `k`.
    pub fn gram_matrix(&self) -> BandedSym {
        let ac = self.autocorrelation();
        let m = self.rows();
        let mut g = BandedSym::zeros(m, self.k);
        for i in 0..m {
            for lag in 0..=self.k.min(i) {
                g.add(i, i - lag, ac[lag]);
            }
        }
        g
    }

    /// `Σ_c coef[c] coef[c + lag]` for `lag ∈ [0, k]`.
    pub fn autocorrelation(&self) -> Vec<f64> {
        (0..=self.k)
            .map(|lag| {
                (0..=self.k - lag)
                    .map(|c| self.coef[c] * self.coef[c + lag])
                    .sum()
            })
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.rows(), self.n);
        for r in 0..self.rows() {
            for (c, a) in self.coef.iter().enumerate() {
                d[(r, r + c)] = *a;
            }
        }
        d
    }
}

/// `(−1)^{k−c} C(k, c)` for `c ∈ [0, k]`.
pub fn row_coefficients(k: usize) -> Vec<f64> {
    (0..=k)
        .map(|c| {
            let sign = if (k - c) % 2 == 0 { 1.0 } else { -1.0 };
            sign * math::binomial(k, c)
        })
        .collect()
}

/// Entry `i` (1-based) of the falling factorial column `φ_j^k`.
///
/// `φ_j(i) = C(i−1, j−1)` for `j ≤ k`, and `C(i−j+k−1, k−1)·1{i ≥ j}` for `j > k`.
pub fn falling_factorial_entry(k: usize, j: usize, i: usize) -> f64 {
    if j <= k {
        math::binomial(i - 1, j - 1)
    } else if i >= j {
        math::binomial(i - j + k - 1, k - 1)
    } else {
        0.0
    }
}

/// The complete falling factorial dictionary `Ψ = (φ_1, …, φ_n)`.
///
/// `(A(k); Δ(k)) Ψ = I_n` where `A(k)` is [`leading_rows`].
pub fn falling_factorial_basis(n: usize, k: usize) -> Result<DMatrix<f64>> {
    DiffOperator::new(n, k)?;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        falling_factorial_entry(k, j + 1, i + 1)
    }))
}

/// `A(k) ∈ ℝ^{k×n}` with `A_{ij} = (−1)^{i+j} C(i−1, j−1)` (zero for `j > i`),
/// the rows completing `Δ(k)` to an invertible matrix.
pub fn leading_rows(n: usize, k: usize) -> Result<DMatrix<f64>> {
    DiffOperator::new(n, k)?;
    Ok(DMatrix::from_fn(k, n, |i, j| {
        if j > i {
            0.0
        } else {
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            sign * math::binomial(i, j)
        }
    }))
}

/// Orthonormal basis of the polynomials of degree `< k` on `len` points,
/// from re-orthogonalized Gram–Schmidt on centered monomials.
pub fn polynomial_basis(len: usize, k: usize) -> Vec<Vec<f64>> {
    let dim = k.min(len);
    let mid = (len as f64 - 1.0) / 2.0;
    let half = mid.max(1.0);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for d in 0..dim {
        let mut v: Vec<f64> = (0..len)
            .map(|i| math::powi((i as f64 - mid) / half, d))
            .collect();
        for _ in 0..2 {
            for b in &basis {
                let ip = math::dot(b, &v);
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= ip * y;
                }
            }
        }
        let nv = math::norm2(&v);
        for x in v.iter_mut() {
            *x /= nv;
        }
        basis.push(v);
    }
    basis
}

/// Columns `ψ_J` of `Δ(k)⁺` for a single operator of length `len`: each is the
/// anti-projection of `φ_J` on the orthocomplement of the polynomials of
/// degree `< k`.
#[derive(Debug, Clone)]
pub struct PinvDictionary {
    len: usize,
    k: usize,
    basis: Vec<Vec<f64>>,
}

impl PinvDictionary {
    pub fn new(len: usize, k: usize) -> Result<Self> {
        if k == 0 || k > len {
            return Err(Error::InvalidOrder { n: len, k });
        }
        Ok(Self {
            len,
            k,
            basis: polynomial_basis(len, k),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == self.k
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of columns, `len − k`.
    pub fn columns(&self) -> usize {
        self.len - self.k
    }

    /// Orthonormal basis of the null space of the local `Δ(k)`.
    pub fn null_basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    fn mirror(&self, label: usize) -> usize {
        self.len + self.k + 1 - label
    }

    // Columns with short support are computed directly; the others are mirror
    // images, which keeps the anti-projection free of cancellation.
    fn is_direct(&self, label: usize) -> bool {
        2 * label >= self.len + self.k + 1
    }

    fn reflect_sign(&self) -> f64 {
        if self.k % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    fn check_label(&self, label: usize) -> Result<()> {
        if label < self.k + 1 || label > self.len {
            return Err(Error::IndexOutOfRange {
                index: label,
                lo: self.k + 1,
                hi: self.len,
            });
        }
        Ok(())
    }

    fn direct_column(&self, label: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (1..=self.len)
            .map(|i| falling_factorial_entry(self.k, label, i))
            .collect();
        for _ in 0..2 {
            self.remove_null_component(&mut v);
        }
        v
    }

    fn remove_null_component(&self, v: &mut [f64]) {
        for b in &self.basis {
            let ip = math::dot(b, v);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= ip * y;
            }
        }
    }

    /// `ψ_J` for `J ∈ [k+1 : len]`.
    pub fn column(&self, label: usize) -> Result<Vec<f64>> {
        self.check_label(label)?;
        if self.is_direct(label) {
            Ok(self.direct_column(label))
        } else {
            let sign = self.reflect_sign();
            let mut v = self.direct_column(self.mirror(label));
            v.reverse();
            for x in v.iter_mut() {
                *x *= sign;
            }
            Ok(v)
        }
    }

    pub fn sq_norm(&self, label: usize) -> Result<f64> {
        let c = self.column(label)?;
        Ok(math::dot(&c, &c))
    }

    /// `‖ψ_J‖²₂` for `J = k+1, …, len`.
    pub fn sq_norms(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.columns()];
        for label in self.k + 1..=self.len {
            if self.is_direct(label) {
                let c = self.direct_column(label);
                let v = math::dot(&c, &c);
                out[label - self.k - 1] = v;
                let m = self.mirror(label);
                if m != label && m >= self.k + 1 {
                    out[m - self.k - 1] = v;
                }
            }
        }
        out
    }

    /// `ψ_Jᵀ x` for every column, in `O(len · k)`.
    pub fn inner_products(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.len);
        let mut e = x.to_vec();
        for _ in 0..2 {
            self.remove_null_component(&mut e);
        }
        // k-fold suffix sums give φ_Jᵀe; mirrored columns use the reversed signal.
        let forward = iterated_suffix_sums(&e, self.k);
        let mut rev = e.clone();
        rev.reverse();
        let backward = iterated_suffix_sums(&rev, self.k);
        let sign = self.reflect_sign();
        (self.k + 1..=self.len)
            .map(|label| {
                if self.is_direct(label) {
                    forward[label - 1]
                } else {
                    sign * backward[self.mirror(label) - 1]
                }
            })
            .collect()
    }

    /// Orthogonal projection of `x` on the local null space.
    pub fn project_null(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for b in &self.basis {
            let ip = math::dot(b, x);
            for (o, y) in out.iter_mut().zip(b) {
                *o += ip * y;
            }
        }
        out
    }

    /// Dense `len × (len − k)` matrix of all columns.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.len, self.columns());
        for label in self.k + 1..=self.len {
            let c = self.column(label).expect("label in range");
            m.column_mut(label - self.k - 1).copy_from_slice(&c);
        }
        m
    }
}

fn iterated_suffix_sums(x: &[f64], times: usize) -> Vec<f64> {
    let mut v = x.to_vec();
    for _ in 0..times {
        let mut acc = 0.0;
        for y in v.iter_mut().rev() {
            acc += *y;
            *y = acc;
        }
    }
    v
}

/// Route used to compute `Δ(k)⁺`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PinvMethod {
    /// Anti-projected falling factorial columns.
    #[default]
    FallingFactorial,
    /// `Δᵀ(ΔΔᵀ)⁻¹` with a banded Cholesky factor of `ΔΔᵀ`.
    NormalEquations,
}

/// Columns of `Δ(k)⁺` as an `n × (n−k)` matrix, refusing `n > DEFAULT_DENSE_CAP`.
pub fn pinv_columns(n: usize, k: usize) -> Result<DMatrix<f64>> {
    pinv_columns_with(n, k, PinvMethod::FallingFactorial, DEFAULT_DENSE_CAP)
}

pub fn pinv_columns_with(n: usize, k: usize, method: PinvMethod, cap: usize) -> Result<DMatrix<f64>> {
    let op = DiffOperator::new(n, k)?;
    if n > cap {
        return Err(Error::DenseCapExceeded { n, cap });
    }
    match method {
        PinvMethod::FallingFactorial => Ok(PinvDictionary::new(n, k)?.to_matrix()),
        PinvMethod::NormalEquations => {
            let chol = op.gram_matrix().cholesky()?;
            let m = op.rows();
            let mut out = DMatrix::zeros(n, m);
            let mut e = vec![0.0; m];
            for r in 0..m {
                e.iter_mut().for_each(|x| *x = 0.0);
                e[r] = 1.0;
                chol.solve_in_place(&mut e);
                let col = op.apply_transpose(&e);
                out.column_mut(r).copy_from_slice(&col);
            }
            Ok(out)
        }
    }
}

/// Closed-form `‖ψ_j^𝒟‖²₂` for `k ∈ {1, 2, 3}` and `j ∈ [k+1 : n]`.
pub fn column_norm_exact(n: usize, k: usize, j: usize) -> Result<f64> {
    if !(1..=3).contains(&k) {
        return Err(Error::UnsupportedOrder { k });
    }
    DiffOperator::new(n, k)?;
    if j < k + 1 || j > n {
        return Err(Error::IndexOutOfRange {
            index: j,
            lo: k + 1,
            hi: n,
        });
    }
    let (nf, jf) = (n as f64, j as f64);
    let v = match k {
        1 => (jf - 1.0) * (nf - jf + 1.0) / nf,
        2 => {
            (nf - jf + 1.0) * (nf - jf + 2.0) * (jf - 2.0) * (jf - 1.0)
                * (2.0 * jf * (nf - jf + 3.0) - 3.0 * (nf + 1.0))
                / (6.0 * nf * (nf + 1.0) * (nf - 1.0))
        }
        _ => {
            let pre = (jf - 3.0) * (jf - 2.0) * (jf - 1.0)
                * (nf + 3.0 - jf) * (nf + 2.0 - jf) * (nf + 1.0 - jf)
                / (60.0 * (nf + 2.0) * (nf + 1.0) * nf * (nf - 1.0) * (nf - 2.0));
            let a = jf * (nf + 4.0 - jf);
            pre * (10.0 * (nf + 1.0) * (nf + 2.0) + 3.0 * a * (a - 4.0 * nf - 5.0))
        }
    };
    Ok(v)
}

/// Upper bound `min((j−k)^{2k−1}, (n+1−j)^{2k−1}) ≥ ‖ψ_j^𝒟‖²₂`.
pub fn column_norm_bound(n: usize, k: usize, j: usize) -> f64 {
    let e = 2 * k - 1;
    let left = j.saturating_sub(k) as f64;
    let right = (n + 1).saturating_sub(j) as f64;
    math::powi(left.min(right), e)
}

/// One diagonal block of `Ψ^{−S}`: segment `segment` owns the signal
/// positions `col_start .. col_start + len` (0-based).
#[derive(Debug, Clone)]
pub struct Block {
    pub segment: usize,
    pub col_start: usize,
    pub dict: PinvDictionary,
}

impl Block {
    pub fn len(&self) -> usize {
        self.dict.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dict.is_empty()
    }

    /// Global row label of the block's local column label `J`.
    pub fn global_label(&self, local: usize) -> usize {
        self.col_start + local
    }
}

/// The dictionary `Ψ^{−S}` obtained by removing the rows `S̃ = S ∪ mocks` of
/// `Δ(k)`, which splits the operator into `s + 1` independent blocks.
#[derive(Debug, Clone)]
pub struct BlockDictionary {
    n: usize,
    k: usize,
    s: usize,
    blocks: Vec<Block>,
    labels: Vec<usize>,
}

impl BlockDictionary {
    pub fn new(op: &DiffOperator, active: &ActiveSet) -> Result<Self> {
        let (n, k) = (op.n(), op.k());
        if active.n() != n || active.k() != k {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: active.n(),
            });
        }
        let t = active.knots();
        let s = t.len();
        let mut blocks = Vec::with_capacity(s + 1);
        let mut labels = Vec::with_capacity(n - k - s);
        for i in 1..=s + 1 {
            let start = if i == 1 { 0 } else { t[i - 2] - 1 };
            let end = if i == s + 1 { n } else { t[i - 1] - 1 };
            let len = end - start;
            if len < k {
                return Err(Error::SegmentTooShort {
                    segment: i,
                    length: len,
                    required: k,
                });
            }
            let dict = PinvDictionary::new(len, k)?;
            // local label J sits at global label start + J
            labels.extend((k + 1..=len).map(|jl| start + jl));
            blocks.push(Block {
                segment: i,
                col_start: start,
                dict,
            });
        }
        Ok(Self {
            n,
            k,
            s,
            blocks,
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Column labels `j ∈ 𝒟 ∖ S̃` in increasing order.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// `dim N₋S = k + s`.
    pub fn r_s(&self) -> usize {
        self.k + self.s
    }

    /// `dim N̄₋S = k(s + 1)`.
    pub fn r_bar(&self) -> usize {
        self.blocks.iter().map(|b| b.dict.null_basis().len()).sum()
    }

    fn locate(&self, label: usize) -> Result<(&Block, usize)> {
        for b in &self.blocks {
            if label > b.col_start + self.k && label <= b.col_start + b.len() {
                return Ok((b, label - b.col_start));
            }
        }
        Err(Error::IndexOutOfRange {
            index: label,
            lo: self.k + 1,
            hi: self.n,
        })
    }

    /// Full-length column `ψ_j^{−S}`; labels in `S̃` are rejected.
    pub fn column(&self, label: usize) -> Result<Vec<f64>> {
        let (b, local) = self.locate(label)?;
        let c = b.dict.column(local)?;
        let mut out = vec![0.0; self.n];
        out[b.col_start..b.col_start + b.len()].copy_from_slice(&c);
        Ok(out)
    }

    /// `‖ψ_j^{−S}‖²₂`, aligned with [`labels`](Self::labels).
    pub fn sq_norms(&self) -> Vec<f64> {
        self.blocks.iter().flat_map(|b| b.dict.sq_norms()).collect()
    }

    /// `ψ_j^{−S}ᵀ x`, aligned with [`labels`](Self::labels).
    pub fn inner_products(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        self.blocks
            .iter()
            .flat_map(|b| {
                b.dict
                    .inner_products(&x[b.col_start..b.col_start + b.len()])
            })
            .collect()
    }

    /// Orthogonal projection on `N̄₋S`.
    pub fn project_null(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut out = vec![0.0; self.n];
        for b in &self.blocks {
            let range = b.col_start..b.col_start + b.len();
            let p = b.dict.project_null(&x[range.clone()]);
            out[range].copy_from_slice(&p);
        }
        out
    }

    /// Orthonormal basis of `N̄₋S` as full-length vectors.
    pub fn null_basis(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.r_bar());
        for b in &self.blocks {
            for v in b.dict.null_basis() {
                let mut full = vec![0.0; self.n];
                full[b.col_start..b.col_start + b.len()].copy_from_slice(v);
                out.push(full);
            }
        }
        out
    }

    /// Dense `n × |𝒟 ∖ S̃|` matrix; refuses `n > cap`.
    pub fn to_matrix(&self, cap: usize) -> Result<DMatrix<f64>> {
        if self.n > cap {
            return Err(Error::DenseCapExceeded { n: self.n, cap });
        }
        let mut m = DMatrix::zeros(self.n, self.labels.len());
        let mut col = 0;
        for b in &self.blocks {
            for local in self.k + 1..=b.len() {
                let c = b.dict.column(local)?;
                m.view_mut((b.col_start, col), (b.len(), 1))
                    .copy_from_slice(&c);
                col += 1;
            }
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn first_differences() {
        let op = DiffOperator::new(4, 1).unwrap();
        assert_eq!(op.apply(&[1.0, 4.0, 9.0, 16.0]), vec![3.0, 5.0, 7.0]);
    }

    #[test]
    fn second_difference_pattern() {
        let d = DiffOperator::new(5, 2).unwrap().to_dense();
        for r in 0..3 {
            assert_eq!(d[(r, r)], 1.0);
            assert_eq!(d[(r, r + 1)], -2.0);
            assert_eq!(d[(r, r + 2)], 1.0);
        }
    }

    #[test]
    fn transpose_is_adjoint() {
        let op = DiffOperator::new(9, 3).unwrap();
        let f: Vec<f64> = (0..9).map(|i| (i as f64 * 0.7).sin()).collect();
        let q: Vec<f64> = (0..6).map(|i| (i as f64 * 1.3).cos()).collect();
        let lhs = math::dot(&op.apply(&f), &q);
        let rhs = math::dot(&f, &op.apply_transpose(&q));
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn banded_products_match_dense() {
        let op = DiffOperator::new(8, 3).unwrap();
        let d = op.to_dense();
        let dtd = d.transpose() * &d;
        let ddt = &d * d.transpose();
        let nm = op.normal_matrix();
        let gm = op.gram_matrix();
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(nm.get(i, j), dtd[(i, j)]);
            }
        }
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(gm.get(i, j), ddt[(i, j)]);
            }
        }
    }

    #[test]
    fn rejects_bad_order() {
        assert_eq!(
            DiffOperator::new(3, 3).unwrap_err(),
            Error::InvalidOrder { n: 3, k: 3 }
        );
        assert!(DiffOperator::new(3, 0).is_err());
    }

    #[test]
    fn exact_norm_examples() {
        assert!((column_norm_exact(4, 1, 2).unwrap() - 0.75).abs() < 1e-15);
        assert!((column_norm_exact(5, 2, 3).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(
            column_norm_exact(10, 4, 6).unwrap_err(),
            Error::UnsupportedOrder { k: 4 }
        );
    }

    #[test]
    fn bound_at_left_edge_is_one() {
        for k in 1..=4 {
            assert_eq!(column_norm_bound(50, k, k + 1), 1.0);
        }
        assert_eq!(column_norm_bound(100, 1, 2), 1.0);
    }

    #[test]
    fn inner_products_match_columns() {
        let d = PinvDictionary::new(23, 3).unwrap();
        let x: Vec<f64> = (0..23).map(|i| ((i * i) as f64 * 0.37).sin()).collect();
        let fast = d.inner_products(&x);
        for label in 4..=23 {
            let c = d.column(label).unwrap();
            assert!((fast[label - 4] - math::dot(&c, &x)).abs() < 1e-10);
        }
    }

    #[test]
    fn block_labels_skip_active_and_mock_rows() {
        let op = DiffOperator::new(30, 3).unwrap();
        let s = ActiveSet::new(30, 3, vec![10, 20], vec![1, -1]).unwrap();
        let bd = BlockDictionary::new(&op, &s).unwrap();
        let mut expected: Vec<usize> = (4..=30).collect();
        expected.retain(|j| ![10, 11, 12, 20, 21, 22].contains(j));
        assert_eq!(bd.labels(), expected.as_slice());
        assert_eq!(bd.r_bar(), 9);
        assert_eq!(bd.r_s(), 5);
    }

    #[test]
    fn short_segment_is_named() {
        let op = DiffOperator::new(30, 3).unwrap();
        let s = ActiveSet::new(30, 3, vec![10, 11], vec![1, -1]).unwrap();
        assert_eq!(
            BlockDictionary::new(&op, &s).unwrap_err(),
            Error::SegmentTooShort {
                segment: 2,
                length: 1,
                required: 3
            }
        );
    }
}
