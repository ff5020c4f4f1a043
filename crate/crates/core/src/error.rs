use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("difference order k={k} must satisfy 1 <= k <= n-1 (n={n})")]
    InvalidOrder { n: usize, k: usize },

    #[error("no closed form for k={k}; use column_norm_bound or the numeric dictionary instead")]
    UnsupportedOrder { k: usize },

    #[error("index {index} outside the valid range [{lo}, {hi}]")]
    IndexOutOfRange { index: usize, lo: usize, hi: usize },

    #[error("dense materialization of size {n} exceeds the cap {cap}; use the column bounds instead")]
    DenseCapExceeded { n: usize, cap: usize },

    #[error("segment {segment} has length {length}; at least {required} is needed")]
    SegmentTooShort {
        segment: usize,
        length: usize,
        required: usize,
    },

    #[error("invalid active set: {0}")]
    InvalidActiveSet(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },

    #[error("linear system is numerically singular")]
    Singular,

    #[error("interpolating vector violates its constraint at {} entries (worst: {:?})", .count, .worst)]
    Infeasible {
        count: usize,
        /// `(label, |q_j| − cap_j)` for the largest violations, worst first.
        worst: Vec<(usize, f64)>,
    },

    #[error("jump layout infeasible: {0}")]
    InfeasibleLayout(String),
}
