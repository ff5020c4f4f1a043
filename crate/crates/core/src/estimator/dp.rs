//! Exact solver for the one-dimensional fused lasso (`k = 1`) by forward
//! message passing over piecewise-linear derivatives.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

/// `argmin_b ½‖y − b‖² + c Σ|b_i − b_{i−1}|`.
pub fn fused_lasso_dp(y: &[f64], c: f64) -> Vec<f64> {
    let n = y.len();
    if n == 0 {
        return Vec::new();
    }
    if c <= 0.0 || n == 1 {
        return y.to_vec();
    }
    // F'(b) = A0·b + B0 + Σ_{knots x < b} (da·b + db)
    let mut knots: VecDeque<(f64, f64, f64)> = VecDeque::new();
    let (mut a0, mut b0) = (1.0, -y[0]);
    let (mut ar, mut br) = (1.0, -y[0]);
    let mut lo = vec![0.0; n - 1];
    let mut hi = vec![0.0; n - 1];

    for i in 0..n - 1 {
        // left truncation at −c
        let (mut a, mut b) = (a0, b0);
        while let Some(&(x, da, db)) = knots.front() {
            if a * x + b >= -c {
                break;
            }
            a += da;
            b += db;
            knots.pop_front();
        }
        let xl = (-c - b) / a;
        knots.push_front((xl, a, b + c));
        a0 = 0.0;
        b0 = -c;
        lo[i] = xl;

        // right truncation at +c
        let (mut a, mut b) = (ar, br);
        while let Some(&(x, da, db)) = knots.back() {
            if a * x + b <= c {
                break;
            }
            a -= da;
            b -= db;
            knots.pop_back();
        }
        let xr = (c - b) / a;
        knots.push_back((xr, -a, c - b));
        ar = 0.0;
        br = c;
        hi[i] = xr;

        // add the next quadratic
        a0 += 1.0;
        b0 -= y[i + 1];
        ar += 1.0;
        br -= y[i + 1];
    }

    // root of F_n'
    let (mut a, mut b) = (a0, b0);
    let mut root = None;
    for &(x, da, db) in knots.iter() {
        if a * x + b >= 0.0 {
            root = Some(-b / a);
            break;
        }
        a += da;
        b += db;
    }
    let last = root.unwrap_or(-b / a);

    let mut beta = vec![0.0; n];
    beta[n - 1] = last;
    for i in (0..n - 1).rev() {
        beta[i] = beta[i + 1].clamp(lo[i], hi[i]);
    }
    beta
}
