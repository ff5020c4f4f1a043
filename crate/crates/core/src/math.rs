//! Thin wrappers over `libm` so the rest of the crate reads like `std`.

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn powf(x: f64, e: f64) -> f64 {
    libm::pow(x, e)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

pub fn powi(x: f64, e: usize) -> f64 {
    let mut acc = 1.0;
    for _ in 0..e {
        acc *= x;
    }
    acc
}

/// `C(n, r)` in floating point; exact for every argument used here.
pub fn binomial(n: usize, r: usize) -> f64 {
    if r > n {
        return 0.0;
    }
    let r = r.min(n - r);
    let mut acc = 1.0;
    for i in 0..r {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    round_if_integral(acc)
}

fn round_if_integral(x: f64) -> f64 {
    let r = round(x);
    if abs(r - x) < 1e-9 * r.max(1.0) {
        r
    } else {
        x
    }
}

pub fn signum(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    // Scaled accumulation keeps huge falling-factorial columns finite.
    let scale = x.iter().fold(0.0f64, |m, v| m.max(abs(*v)));
    if scale == 0.0 {
        return 0.0;
    }
    let s: f64 = x.iter().map(|v| (v / scale) * (v / scale)).sum();
    scale * sqrt(s)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(abs(*v)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(10, 0), 1.0);
        assert_eq!(binomial(3, 5), 0.0);
        assert_eq!(binomial(40, 20), 137846528820.0);
    }

    #[test]
    fn integer_powers() {
        assert_eq!(powi(3.0, 4), 81.0);
        assert_eq!(powi(2.5, 0), 1.0);
    }
}
