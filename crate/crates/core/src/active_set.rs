//! Jump sets `S = {t₁ < … < t_s} ⊆ [k+1 : n]` with their sign pattern.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

/// An active set with signs.
///
/// Sentinels are `t₀ = k` and `t_{s+1} = n + 1`; segment `i ∈ [1 : s+1]` is
/// `[t_{i−1}, t_i]` with length `n_i = t_i − t_{i−1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveSet {
    n: usize,
    k: usize,
    knots: Vec<usize>,
    signs: Vec<i8>,
}

impl ActiveSet {
    pub fn new(n: usize, k: usize, knots: Vec<usize>, signs: Vec<i8>) -> Result<Self> {
        if k == 0 || k >= n {
            return Err(Error::InvalidOrder { n, k });
        }
        if knots.len() != signs.len() {
            return Err(Error::InvalidActiveSet(format!(
                "{} knots but {} signs",
                knots.len(),
                signs.len()
            )));
        }
        for (idx, &t) in knots.iter().enumerate() {
            if t < k + 1 || t > n {
                return Err(Error::InvalidActiveSet(format!(
                    "knot {t} outside [{}, {n}]",
                    k + 1
                )));
            }
            if idx > 0 && knots[idx - 1] >= t {
                return Err(Error::InvalidActiveSet(
                    "knots must be strictly increasing".into(),
                ));
            }
        }
        if let Some(s) = signs.iter().find(|s| **s != 1 && **s != -1) {
            return Err(Error::InvalidActiveSet(format!("sign {s} is not ±1")));
        }
        Ok(Self { n, k, knots, signs })
    }

    pub fn empty(n: usize, k: usize) -> Result<Self> {
        Self::new(n, k, Vec::new(), Vec::new())
    }

    /// Support and signs of `Δ(k) f`, keeping entries above `rel_tol · max|Δ(k) f|`.
    pub fn from_signal(f: &[f64], k: usize, rel_tol: f64) -> Result<Self> {
        let op = crate::DiffOperator::new(f.len(), k)?;
        let d = op.apply(f);
        let thr = rel_tol * math::max_abs(&d);
        let mut knots = Vec::new();
        let mut signs = Vec::new();
        for (r, v) in d.iter().enumerate() {
            if math::abs(*v) > thr && *v != 0.0 {
                knots.push(r + k + 1);
                signs.push(if *v > 0.0 { 1 } else { -1 });
            }
        }
        Self::new(f.len(), k, knots, signs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn s(&self) -> usize {
        self.knots.len()
    }

    pub fn knots(&self) -> &[usize] {
        &self.knots
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// `t₀, t₁, …, t_s, t_{s+1}`.
    pub fn boundaries(&self) -> Vec<usize> {
        let mut b = Vec::with_capacity(self.s() + 2);
        b.push(self.k);
        b.extend_from_slice(&self.knots);
        b.push(self.n + 1);
        b
    }

    /// `n₁, …, n_{s+1}`; they sum to `n + 1 − k`.
    pub fn segment_lengths(&self) -> Vec<usize> {
        self.boundaries().windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn n_max(&self) -> usize {
        self.segment_lengths().into_iter().max().unwrap_or(0)
    }

    /// Membership of each segment `1..=s+1` in `S±`: the two boundary
    /// segments plus interior segments whose end signs differ.
    pub fn sign_change_segments(&self) -> Vec<bool> {
        let s = self.s();
        (1..=s + 1)
            .map(|i| i == 1 || i == s + 1 || self.signs[i - 1] != self.signs[i - 2])
            .collect()
    }

    /// Mock labels `t_i + 1, …, t_i + k − 1` that stay inside `[k+1 : n]`.
    pub fn mock_labels(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for &t in &self.knots {
            for j in 1..self.k {
                if t + j <= self.n {
                    out.push(t + j);
                }
            }
        }
        out
    }

    /// Labels of `𝒟 ∖ S` in increasing order.
    pub fn inactive_labels(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n - self.k - self.s());
        let mut it = self.knots.iter().peekable();
        for j in self.k + 1..=self.n {
            if it.peek() == Some(&&j) {
                it.next();
            } else {
                out.push(j);
            }
        }
        out
    }

    /// Checks `n_i ≥ min_len` on every `S±` segment.
    pub fn check_min_length(&self, min_len: usize) -> Result<()> {
        let lens = self.segment_lengths();
        for (i, pm) in self.sign_change_segments().into_iter().enumerate() {
            if pm && lens[i] < min_len {
                return Err(Error::SegmentTooShort {
                    segment: i + 1,
                    length: lens[i],
                    required: min_len,
                });
            }
        }
        Ok(())
    }
}
