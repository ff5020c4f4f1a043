mod common;

use common::{from_lengths, random_active_set};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tvtrend_core::interpolants::{
    build, build_noiseless, build_noisy, check_monotone, cubic_matching_closed_form,
    delta_k_energy, power_sequence_energy, solve_matching_coefficients, Construction, Mode,
};
use tvtrend_core::{ContinuousProfile, DiffOperator, Error};

fn grid(count: usize) -> impl Iterator<Item = f64> {
    (0..=count).map(move |i| i as f64 / count as f64)
}

fn printed_k1(x: f64) -> f64 {
    if x <= 0.5 {
        1.0 - (2.0 * x).sqrt()
    } else {
        -1.0 + (2.0 * (1.0 - x)).sqrt()
    }
}

fn printed_k2_alt(x: f64) -> f64 {
    if x <= 0.5 {
        1.0 - (2.0 * x).powf(1.5)
    } else {
        -1.0 + (2.0 * (1.0 - x)).powf(1.5)
    }
}

fn printed_k2_split(x: f64) -> f64 {
    if x <= 0.25 {
        1.0 - 0.4 * (4.0 * x).powf(1.5)
    } else if x <= 0.75 {
        0.6 * 4.0 * (0.5 - x)
    } else {
        -1.0 + 0.4 * 4f64.powf(1.5) * (1.0 - x).powf(1.5)
    }
}

fn printed_k3(x: f64) -> f64 {
    if x <= 0.25 {
        1.0 - 4.0 / 19.0 * (4.0 * x).powf(2.5)
    } else if x <= 0.75 {
        let y = 0.5 - x;
        -5.0 / 38.0 * 64.0 * y.powi(3) + 35.0 / 38.0 * 4.0 * y
    } else {
        -1.0 + 4.0 / 19.0 * 4f64.powf(2.5) * (1.0 - x).powf(2.5)
    }
}

/// Rounded to two decimals in print; only the left half is given.
fn printed_k4(x: f64) -> f64 {
    if x <= 1.0 / 6.0 {
        1.0 - 18.62 * x.powf(3.5)
    } else if x <= 1.0 / 3.0 {
        44.34 * x.powi(4) - 46.19 * x.powi(3) + 10.16 * x * x - 1.10 * x + 1.05
    } else {
        let y = 0.5 - x;
        -12.93 * y.powi(3) + 4.23 * y
    }
}

#[test]
fn noisy_profiles_match_printed_formulas() {
    let p1 = ContinuousProfile::new(1, Mode::Noisy).unwrap();
    let p2 = ContinuousProfile::new(2, Mode::Noisy).unwrap();
    let p2s = ContinuousProfile::split(2, Mode::Noisy).unwrap();
    let p3 = ContinuousProfile::new(3, Mode::Noisy).unwrap();
    for x in grid(400) {
        assert!((p1.eval(x) - printed_k1(x)).abs() < 1e-13, "k=1 x={x}");
        assert!((p2.eval(x) - printed_k2_alt(x)).abs() < 1e-13, "k=2 x={x}");
        assert!((p2s.eval(x) - printed_k2_split(x)).abs() < 1e-12, "k=2 split x={x}");
        assert!((p3.eval(x) - printed_k3(x)).abs() < 1e-12, "k=3 x={x}");
    }
    let p4 = ContinuousProfile::new(4, Mode::Noisy).unwrap();
    for x in grid(400).map(|x| x / 2.0) {
        assert!((p4.eval(x) - printed_k4(x)).abs() < 5e-3, "k=4 x={x}");
    }
}

#[test]
fn third_derivative_of_cubic_profile() {
    let p = ContinuousProfile::new(3, Mode::Noisy).unwrap().profile;
    for x in [0.01f64, 0.1, 0.2] {
        let want = -15.0 * 16.0 / 19.0 / x.sqrt();
        assert!((p.derivative(x, 3) - want).abs() < 1e-9 * want.abs(), "x={x}");
    }
    for x in [0.3, 0.5, 0.7] {
        assert!((p.derivative(x, 3) - 30.0 * 32.0 / 19.0).abs() < 1e-9, "x={x}");
    }
}

#[test]
fn quartic_profile_constants() {
    let p = ContinuousProfile::new(4, Mode::Noisy).unwrap().profile;
    assert_eq!(p.subintervals(), 6);
    let printed_mid = [1.05, -1.10, 10.16, -46.19, 44.34];
    assert!((p.a0() - 18.62).abs() < 0.01);
    for (got, want) in p.middle()[0].iter().zip(printed_mid) {
        assert!((got - want).abs() < 0.006, "{got} vs {want}");
    }
    assert!((p.center()[0] - 4.23).abs() < 0.006);
    assert!((p.center()[1] + 12.93).abs() < 0.006);
}

#[test]
fn profiles_are_smooth_decreasing_and_antisymmetric() {
    for k in 1..=4 {
        for mode in [Mode::Noiseless, Mode::Noisy] {
            let p = ContinuousProfile::new(k, mode).unwrap();
            assert!(p.is_decreasing(2000), "k={k} {mode:?}");
            assert!(p.profile.max_derivative_jump() < 1e-8, "k={k} {mode:?}");
            assert_eq!(p.eval(0.0), 1.0);
            assert_eq!(p.eval(1.0), -1.0);
            for x in grid(50) {
                assert!((p.eval(x) + p.eval(1.0 - x)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn asymptotic_tuning_constants() {
    let c: Vec<f64> = (1..=4)
        .map(|k| ContinuousProfile::new(k, Mode::Noisy).unwrap().profile.c_k())
        .collect();
    assert!((c[0] - 2.0).abs() < 1e-12);
    assert!((c[1] - 2.0).abs() < 1e-12);
    assert!((c[2] - 9.5).abs() < 1e-12);
    assert!((c[3] - 2.0 * 6f64.powf(3.5) / 18.62).abs() < 0.05, "{}", c[3]);
}

// q_j = 1 − ā₀ (j/d)^{5/2} and p_j = −ā₃ ((2d−j)/d)³ + ā₁ (2d−j)/d must agree
// in value, first and second difference at j = d, d+1, d+2.
fn cubic_matching_residual(d: usize, a0: f64, a1: f64, a3: f64) -> f64 {
    let df = d as f64;
    let q = |j: f64| 1.0 - a0 * (j / df).powf(2.5);
    let p = |j: f64| {
        let y = (2.0 * df - j) / df;
        -a3 * y.powi(3) + a1 * y
    };
    let j0 = df;
    let dq1 = q(j0 + 1.0) - q(j0);
    let dp1 = p(j0 + 1.0) - p(j0);
    let dq2 = q(j0 + 2.0) - 2.0 * q(j0 + 1.0) + q(j0);
    let dp2 = p(j0 + 2.0) - 2.0 * p(j0 + 1.0) + p(j0);
    (q(j0) - p(j0))
        .abs()
        .max((dq1 - dp1).abs())
        .max((dq2 - dp2).abs())
}

#[test]
fn cubic_matching_is_exact() {
    for d in 4..=100 {
        let m = solve_matching_coefficients(3, d).unwrap();
        let sc = m.scaled();
        let (a0, a1, a3) = (sc.a0, sc.center[0], -sc.center[1]);
        assert!(cubic_matching_residual(d, a0, a1, a3) < 1e-12, "d={d}");
        let (b0, b1, b3) = cubic_matching_closed_form(d);
        assert!((a0 - b0).abs() < 1e-10 && (a1 - b1).abs() < 1e-10 && (a3 - b3).abs() < 1e-10, "d={d}");
        assert!(m.junction_mismatch() < 1e-12, "d={d}");
    }
}

#[test]
fn cubic_matching_converges() {
    let sc = solve_matching_coefficients(3, 10_000).unwrap().scaled();
    let got = [sc.a0, sc.center[0], -sc.center[1]];
    let want = [4.0 / 19.0, 35.0 / 38.0, 5.0 / 38.0];
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() < 5e-3 * w, "{g} vs {w}");
    }
}

#[test]
fn quartic_matching_near_printed_constants() {
    let m = solve_matching_coefficients(4, 1000).unwrap();
    assert!(m.junction_mismatch() < 1e-10);
    let p = &m.profile;
    let printed_mid = [1.05, -1.10, 10.16, -46.19, 44.34];
    assert!((p.a0() - 18.62).abs() < 0.01 * 18.62);
    for (got, want) in p.middle()[0].iter().zip(printed_mid) {
        assert!((got - want).abs() < 0.01 * want.abs(), "{got} vs {want}");
    }
    for (got, want) in p.center().iter().zip([4.23, -12.93]) {
        assert!((got - want).abs() < 0.01 * want.abs(), "{got} vs {want}");
    }
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn rising(p: f64, k: usize) -> f64 {
    (0..k).map(|i| p - i as f64).product()
}

#[test]
fn power_sequence_energy_grows_logarithmically() {
    for k in 1..=4 {
        let p = (2 * k - 1) as f64 / 2.0;
        // running sum over every d in [2k, 1e5]
        let coef = tvtrend_core::difference::row_coefficients(k);
        let mut e = 0.0;
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for j in k..=100_000usize {
            let v = tvtrend_core::interpolants::power_difference(k, p, j);
            e += v * v;
            if j >= 2 * k {
                xs.push((j as f64).ln().ln());
                ys.push(e.ln());
            }
            if j == 2 * k {
                let direct: f64 = (0..=k)
                    .map(|c| coef[c] * ((j - k + c) as f64).powf(p))
                    .sum();
                assert!((v - direct).abs() < 1e-12 * direct.abs().max(1.0));
            }
        }
        assert!((e - power_sequence_energy(k, 100_000)).abs() < 1e-9 * e);
        let slope = least_squares_slope(&xs, &ys);
        assert!(slope <= 1.05, "k={k} slope {slope}");
        // Δ(k) j^p ≈ (p)_k j^{−1/2}, so increments per unit of log d tend to (p)_k²
        let inc = (power_sequence_energy(k, 100_000) - power_sequence_energy(k, 10_000))
            / 10f64.ln();
        let want = rising(p, k).powi(2);
        assert!((inc - want).abs() < 0.01 * want, "k={k} {inc} vs {want}");
    }
}

fn check_against<F: Fn(usize, &[usize], usize, usize) -> Option<f64>>(
    k: usize,
    lens: &[usize],
    signs: &[i8],
    oracle: F,
) {
    let a = from_lengths(k, lens, signs);
    let v = build(&a, Mode::Noisy, Construction::Continuous, None).unwrap();
    let bounds = a.boundaries();
    for i in 1..=lens.len() {
        for j in 1..lens[i - 1] {
            if let Some(want) = oracle(i, lens, j, a.n_max()) {
                let got = v.value(bounds[i - 1] + j);
                assert!((got - want).abs() < 1e-13, "k={k} segment {i} j={j}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn k1_noisy_vector_matches_printed_pieces() {
    let lens = [12, 8, 10, 14, 6];
    let signs = [1i8, -1, -1, 1];
    check_against(1, &lens, &signs, |i, lens, j, n_max| {
        let (ni, jf) = (lens[i - 1] as f64, j as f64);
        let half = jf <= ni / 2.0;
        Some(match i {
            1 => {
                if half {
                    (jf / (2.0 * ni)).sqrt()
                } else {
                    1.0 - ((ni - jf) / (2.0 * ni)).sqrt()
                }
            }
            5 => {
                if half {
                    1.0 - (jf / (2.0 * ni)).sqrt()
                } else {
                    ((ni - jf) / (2.0 * ni)).sqrt()
                }
            }
            3 => -(1.0 - (4.0 * jf * (ni - jf) / (ni * n_max as f64)).sqrt()),
            _ => {
                let sign = signs[i - 2] as f64;
                sign * printed_k1(jf / ni)
            }
        })
    });
    let a = from_lengths(1, &[5, 8, 5], &[1, -1]);
    let v = build(&a, Mode::Noisy, Construction::Continuous, None).unwrap();
    assert!((v.value(a.knots()[0] + 1) - 0.5).abs() < 1e-15);
}

#[test]
fn k2_noisy_vector_matches_printed_pieces() {
    let lens = [12, 8, 10, 16];
    let signs = [-1i8, 1, 1];
    check_against(2, &lens, &signs, |i, lens, j, n_max| {
        let (ni, jf) = (lens[i - 1] as f64, j as f64);
        let half = jf <= ni / 2.0;
        Some(match i {
            1 => {
                let v = if half {
                    2f64.sqrt() * (jf / ni).powf(1.5)
                } else {
                    1.0 - 2f64.sqrt() * ((ni - jf) / ni).powf(1.5)
                };
                -v
            }
            2 => -printed_k2_alt(jf / ni),
            3 => 1.0 - (4.0 * jf * (ni - jf) / (ni * n_max as f64)).powf(1.5),
            _ => {
                if half {
                    1.0 - 2f64.sqrt() * (jf / ni).powf(1.5)
                } else {
                    2f64.sqrt() * ((ni - jf) / ni).powf(1.5)
                }
            }
        })
    });
}

#[test]
fn odd_segments_repeat_their_left_value() {
    for k in 2..=4 {
        let odd = k * (k + 2) | 1;
        let a = from_lengths(k, &[odd, odd + 2, odd], &[1, -1]);
        for construction in [Construction::Continuous, Construction::Discrete] {
            let v = build(&a, Mode::Noisy, construction, None).unwrap();
            let t = a.knots();
            assert_eq!(v.value(t[0] + 1), 1.0, "k={k}");
            assert_eq!(v.value(t[1] + 1), -1.0, "k={k}");
            assert_eq!(v.value(k + 1), 0.0, "k={k}");
        }
    }
}

#[test]
fn k1_noiseless_energy_within_printed_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..200 {
        let a = random_active_set(&mut rng, 1, 2, 300, 10);
        let v = build_noiseless(&a).unwrap();
        assert!(v.interpolates());
        v.check_feasible(0.0).unwrap();
        let lens = a.segment_lengths();
        let pm = a.sign_change_segments();
        let n = a.n() as f64;
        let s = a.s();
        let bound = if s == 0 {
            0.0
        } else {
            let (n1, ns) = (lens[0] as f64, lens[s] as f64);
            let inner: f64 = (1..s)
                .filter(|&i| pm[i])
                .map(|i| 4.0 * n / lens[i] as f64)
                .sum();
            n / (n1 * n1) + n / n1 + inner + n / ns + n / (ns * ns)
        };
        let e = delta_k_energy(&v).unwrap();
        assert!(e <= bound * (1.0 + 1e-12), "{:?}: {e} > {bound}", lens);
    }
}

#[test]
fn linear_interpolation_energy_is_exact_for_one_sign_change() {
    // interior segment of length n_i contributes exactly 4n/n_i
    let a = from_lengths(1, &[10, 20, 10], &[1, -1]);
    let b = from_lengths(1, &[10, 30, 10], &[1, -1]);
    let ea = delta_k_energy(&build_noiseless(&a).unwrap()).unwrap() / a.n() as f64;
    let eb = delta_k_energy(&build_noiseless(&b).unwrap()).unwrap() / b.n() as f64;
    assert!(((ea - 4.0 / 20.0) - (eb - 4.0 / 30.0)).abs() < 1e-12);
}

#[test]
fn noisy_vectors_are_feasible_and_monotone() {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    for k in 1..=4 {
        let min = k * (k + 2);
        for _ in 0..60 {
            let a = random_active_set(&mut rng, k, min, 800, 8);
            let op = DiffOperator::new(a.n(), k).unwrap();
            let dict = tvtrend_core::BlockDictionary::new(&op, &a).unwrap();
            let u = 20f64.ln();
            let inputs = tvtrend_core::theory::BoundInputs::from_active(&a, u, u);
            let c_k = tvtrend_core::theory::shipped_c_k(k).unwrap();
            let lambda = tvtrend_core::theory::lambda_threshold(&inputs, Some(c_k)).unwrap();
            let w = tvtrend_core::sparsity::Weights::new(&dict, &a, lambda, u).unwrap();
            for construction in [Construction::Continuous, Construction::Discrete] {
                let v = build_noisy(&a, &w.w, construction).unwrap();
                assert!(v.interpolates());
                v.check_feasible(0.0).unwrap();
                for m in check_monotone(&v) {
                    assert!(m.monotone, "k={k} segment {} {:?}", m.segment, a.segment_lengths());
                }
            }
        }
    }
}

#[test]
fn infeasible_vectors_report_violations() {
    let a = from_lengths(1, &[6, 6, 6], &[1, -1]);
    let w = vec![0.9; a.n() - 1];
    let v = build(&a, Mode::Noisy, Construction::Continuous, Some(&w)).unwrap();
    match v.check_feasible(0.0) {
        Err(Error::Infeasible { count, worst }) => {
            assert!(count > 0);
            assert!(worst.len() <= 5);
            assert!(worst.windows(2).all(|p| p[0].1 >= p[1].1));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn short_segments_are_rejected() {
    let a = from_lengths(3, &[15, 14, 15], &[1, -1]);
    let w = vec![0.0; a.n() - 3];
    assert!(matches!(
        build_noisy(&a, &w, Construction::Continuous),
        Err(Error::SegmentTooShort { segment: 2, .. })
    ));
}

proptest! {
    #[test]
    fn noiseless_vectors_interpolate(seed in 0u64..10_000, k in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_active_set(&mut rng, k, k.max(2), 200, 6);
        let v = build_noiseless(&a).unwrap();
        prop_assert!(v.interpolates());
        prop_assert!(v.q.iter().all(|x| x.abs() <= 1.0));
        prop_assert!(check_monotone(&v).iter().all(|m| m.monotone));
    }

    #[test]
    fn k1_vectors_mirror(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_active_set(&mut rng, 1, 2, 120, 6);
        let mut lens = a.segment_lengths();
        lens.reverse();
        let mut signs = a.signs().to_vec();
        signs.reverse();
        let b = from_lengths(1, &lens, &signs);
        for mode in [Mode::Noiseless, Mode::Noisy] {
            let qa = build(&a, mode, Construction::Continuous, None).unwrap().q;
            let mut qb = build(&b, mode, Construction::Continuous, None).unwrap().q;
            qb.reverse();
            for (x, y) in qa.iter().zip(&qb) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
