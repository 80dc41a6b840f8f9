//! Reference implementations independent of the library.
#![allow(dead_code)]

/// Standard normal CDF: Taylor series for |x| ≤ 5, Laplace continued
/// fraction beyond.
pub fn phi(x: f64) -> f64 {
    let dens = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if x.abs() <= 5.0 {
        let mut term = x;
        let mut sum = x;
        let mut n = 1.0;
        while term.abs() > 1e-18 * sum.abs().max(1e-300) {
            n += 2.0;
            term *= x * x / n;
            sum += term;
        }
        0.5 + dens * sum
    } else {
        let a = x.abs();
        let mut frac = a;
        for k in (1..200).rev() {
            frac = a + k as f64 / frac;
        }
        let tail = dens / frac;
        if x > 0.0 {
            1.0 - tail
        } else {
            tail
        }
    }
}

/// Root of a monotone function by plain bisection.
pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

pub fn phi_inv(p: f64) -> f64 {
    bisect(|x| phi(x) - p, -40.0, 40.0)
}

/// `1 − Φ((x − mu)/s)`.
pub fn normal_survivor(x: f64, mu: f64, s: f64) -> f64 {
    1.0 - phi((x - mu) / s)
}
