#![allow(dead_code)]
//! Test oracles written independently of the library: a fixed-Talbot
//! inverse Laplace transform and the closed-form transforms it inverts.

use num_complex::Complex64;

/// Fixed-Talbot inversion of `f_hat` at `t > 0` with `m` nodes.
pub fn talbot(f_hat: impl Fn(Complex64) -> Complex64, t: f64, m: usize) -> f64 {
    let r = 2.0 * m as f64 / (5.0 * t);
    let mut sum = 0.5 * (f_hat(Complex64::new(r, 0.0)) * (r * t).exp()).re;
    for k in 1..m {
        let theta = k as f64 * std::f64::consts::PI / m as f64;
        let cot = theta.cos() / theta.sin();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        sum += ((s * t).exp() * f_hat(s) * Complex64::new(1.0, sigma)).re;
    }
    r / m as f64 * sum
}

/// Transform of `G(r, t)`; `r = |x|/√ε`, `b = c²/ε`.
pub fn g_hat(r: f64, s: Complex64, eps: f64, a: f64, c: f64) -> Complex64 {
    let b = c * c / eps;
    let (rs, ra, rb) = (s.sqrt(), (s + a).sqrt(), (s + b).sqrt());
    (-(rs * ra / rb) * r).exp() / (2.0 * eps.sqrt() * ra * rb)
}

/// Transform of `K(x, t)`, the half-order integral of `G`.
pub fn k_hat(x: f64, s: Complex64, eps: f64, a: f64, c: f64) -> Complex64 {
    g_hat(x.abs() / eps.sqrt(), s, eps, a, c) / s.sqrt()
}

pub fn g_talbot(r: f64, t: f64, eps: f64, a: f64, c: f64) -> f64 {
    talbot(|s| g_hat(r, s, eps, a, c), t, 32)
}

pub fn k_talbot(x: f64, t: f64, eps: f64, a: f64, c: f64) -> f64 {
    talbot(|s| k_hat(x, s, eps, a, c), t, 32)
}

/// Composite Simpson on `[lo, hi]` with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (hi - lo) / n as f64;
    let mut s = f(lo) + f(hi);
    for i in 1..n {
        s += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
