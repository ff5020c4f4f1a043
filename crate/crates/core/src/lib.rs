//! Trend filtering: least squares with an ℓ₁ penalty on kth-order discrete
//! differences, together with the dictionary, interpolating-vector and
//! effective-sparsity machinery behind its oracle inequalities.
//!
//! The estimator is
//!
//! ```text
//! f̂ = argmin_f  ‖y − f‖²_n + 2λ‖Δ(k) f‖₁,      ‖v‖²_n = ‖v‖²₂ / n,
//! ```
//!
//! where `Δ(k)` has rows `(Δ(k) f)_i = Σ_l (−1)^l C(k, l) f_{i−l}` for
//! `i ∈ 𝒟 = [k+1 : n]`. All norms written `‖·‖_n` follow that normalization
//! and all logarithms are natural.
//!
//! Index conventions: vectors are 0-based slices, while jump locations,
//! dictionary columns and rows of `Δ(k)` are addressed by their 1-based
//! *labels* in `𝒟 = [k+1 : n]`. Row label `i` sits at slice position `i − k − 1`.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod active_set;
pub mod banded;
pub mod difference;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod interpolants;
pub(crate) mod math;
pub mod sparsity;
pub mod theory;

pub use active_set::ActiveSet;
pub use difference::{BlockDictionary, DiffOperator};
pub use estimator::{fit, Algorithm, FitConfig, FitResult};
pub use interpolants::{ContinuousProfile, InterpolatingVector};
pub use error::{Error, Result};


