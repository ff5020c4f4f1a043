#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tvtrend_core::{ActiveSet, DiffOperator};

/// Active set with segment lengths given left to right.
pub fn from_lengths(k: usize, lens: &[usize], signs: &[i8]) -> ActiveSet {
    let n = lens.iter().sum::<usize>() + k - 1;
    let mut t = k;
    let mut knots = Vec::new();
    for l in &lens[..lens.len() - 1] {
        t += l;
        knots.push(t);
    }
    ActiveSet::new(n, k, knots, signs.to_vec()).unwrap()
}

/// Random active set with `n ≤ n_hi`, `s ≤ s_hi` and every segment at least
/// `min_len` long.
pub fn random_active_set(
    rng: &mut ChaCha8Rng,
    k: usize,
    min_len: usize,
    n_hi: usize,
    s_hi: usize,
) -> ActiveSet {
    let n = rng.random_range(min_len + k - 1..=n_hi);
    let total = n + 1 - k;
    let s = rng.random_range(0..=(total / min_len - 1).min(s_hi));
    let free = total - min_len * (s + 1);
    let mut cuts: Vec<usize> = (0..s).map(|_| rng.random_range(0..=free)).collect();
    cuts.sort();
    let mut lens = Vec::with_capacity(s + 1);
    let mut prev = 0;
    for c in cuts {
        lens.push(c - prev + min_len);
        prev = c;
    }
    lens.push(free - prev + min_len);
    let signs: Vec<i8> = (0..s)
        .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
        .collect();
    from_lengths(k, &lens, &signs)
}

/// `n · min ‖Δ′z‖²` over `z_S = q_S`, `|z_j| ≤ 1 − w_j`, by accelerated
/// projected gradient. By minimax duality this equals the effective sparsity.
pub fn dual_box_qp(active: &ActiveSet, weights: Option<&[f64]>, iters: usize) -> f64 {
    let (n, k) = (active.n(), active.k());
    let op = DiffOperator::new(n, k).unwrap();
    let m = op.rows();
    let mut fixed = vec![None; m];
    for (&t, &s) in active.knots().iter().zip(active.signs()) {
        fixed[t - k - 1] = Some(s as f64);
    }
    let cap: Vec<f64> = (0..m).map(|r| 1.0 - weights.map_or(0.0, |w| w[r])).collect();
    let project = |z: &mut [f64]| {
        for r in 0..m {
            z[r] = match fixed[r] {
                Some(v) => v,
                None => z[r].clamp(-cap[r], cap[r]),
            };
        }
    };
    // ‖ΔΔ′‖ ≤ 4^k
    let step = 1.0 / 4f64.powi(k as i32);
    let mut z = vec![0.0; m];
    project(&mut z);
    let mut y = z.clone();
    let mut t = 1.0f64;
    for _ in 0..iters {
        let g = op.apply(&op.apply_transpose(&y));
        let mut next: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        project(&mut next);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        y = next
            .iter()
            .zip(&z)
            .map(|(a, b)| a + (t - 1.0) / t_next * (a - b))
            .collect();
        z = next;
        t = t_next;
    }
    let h = op.apply_transpose(&z);
    n as f64 * h.iter().map(|x| x * x).sum::<f64>()
}
