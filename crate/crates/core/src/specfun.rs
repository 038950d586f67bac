//! Bessel functions `I₀` and `J₀` of real argument.
//!
//! `I₀` uses the ascending power series below |z| = 25 and the
//! Hankel-type asymptotic expansion above. `J₀` uses the power series below
//! |z| = 3, Miller's backward recurrence up to |z| = 25 and the Hankel
//! expansion beyond.

use crate::error::{PsgeError, Result};

const I0_SERIES_LIMIT: f64 = 25.0;
const J0_SERIES_LIMIT: f64 = 3.0;
const J0_ASYMPTOTIC_LIMIT: f64 = 25.0;
/// Largest argument for which `e^z` is representable.
const EXP_OVERFLOW: f64 = 709.0;

/// A value of `I₀` tagged with whether it carries the `e^{−|z|}` factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselEval {
    pub value: f64,
    pub scaled: bool,
}

impl BesselEval {
    pub fn i0(z: f64) -> Self {
        match bessel_i0(z) {
            Ok(value) => BesselEval {
                value,
                scaled: false,
            },
            Err(_) => BesselEval {
                value: bessel_i0_scaled(z),
                scaled: true,
            },
        }
    }
}

/// Ascending series `Σ (z²/4)^k / (k!)²`.
pub(crate) fn i0_series(z: f64) -> f64 {
    let q = 0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
        k += 1.0;
    }
    sum
}

/// Asymptotic expansion of `e^{−z} I₀(z)` for large positive `z`, summed
/// until the terms stop decreasing.
pub(crate) fn i0e_asymptotic(z: f64) -> f64 {
    let mut term = 1.0_f64;
    let mut sum = 1.0;
    let mut k = 1.0_f64;
    loop {
        let next = term * (2.0 * k - 1.0).powi(2) / (8.0 * z * k);
        if next.abs() >= term.abs() || next.abs() < 1e-17 * sum {
            if next.abs() < term.abs() {
                sum += next;
            }
            break;
        }
        term = next;
        sum += term;
        k += 1.0;
    }
    sum / (2.0 * std::f64::consts::PI * z).sqrt()
}

/// Modified Bessel function `I₀(z)`.
///
/// Fails with a domain error when `e^|z|` overflows; use
/// [`bessel_i0_scaled`] there.
pub fn bessel_i0(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(PsgeError::Domain(format!("I0 of non-finite argument {z}")));
    }
    let az = z.abs();
    if az < I0_SERIES_LIMIT {
        Ok(i0_series(az))
    } else if az <= EXP_OVERFLOW {
        Ok(az.exp() * i0e_asymptotic(az))
    } else {
        Err(PsgeError::Domain(format!(
            "I0({z}) overflows; use the exponentially scaled variant"
        )))
    }
}

/// `e^{−|z|} I₀(z)`, in `(0, 1]` and decreasing in |z|.
pub fn bessel_i0_scaled(z: f64) -> f64 {
    let az = z.abs();
    if az < I0_SERIES_LIMIT {
        (-az).exp() * i0_series(az)
    } else {
        i0e_asymptotic(az)
    }
}

fn j0_series(z: f64) -> f64 {
    let q = -0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
        k += 1.0;
    }
    sum
}

/// Miller backward recurrence normalised by `J₀ + 2 Σ J₂ₖ = 1`.
fn j0_miller(z: f64) -> f64 {
    // J_n(z) decays past n ≈ z over a width ∝ z^{1/3}.
    let mut n = (z + 40.0 + 12.0 * z.cbrt()) as usize;
    if n % 2 == 1 {
        n += 1;
    }
    let mut j_next = 0.0_f64; // J_{k+1}
    let mut j_cur = 1e-30_f64; // J_k, arbitrary seed
    let mut norm = 0.0_f64;
    for k in (1..=n).rev() {
        let j_prev = 2.0 * k as f64 / z * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        // j_cur is now J_{k-1}
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += 2.0 * j_cur;
        }
        if j_cur.abs() > 1e250 {
            j_cur *= 1e-250;
            j_next *= 1e-250;
            norm *= 1e-250;
        }
    }
    norm += j_cur;
    j_cur / norm
}

/// Hankel expansion `√(2/πz) (P cos χ − Q sin χ)`, `χ = z − π/4`; `q`
/// below holds `−Q`.
fn j0_asymptotic(z: f64) -> f64 {
    let y = 1.0 / (8.0 * z);
    let (mut p, mut q) = (1.0, y);
    let mut term = y;
    let mut k = 1.0_f64;
    // term_k = Π (2j−1)² / (j! (8z)^k); even k feed P, odd k feed Q, alternating.
    loop {
        let next = term * (2.0 * k + 1.0).powi(2) * y / (k + 1.0);
        if next.abs() >= term.abs() || next.abs() < 1e-18 {
            break;
        }
        let idx = k as i64 + 1;
        let sign = if (idx / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if idx % 2 == 0 {
            p += sign * next;
        } else {
            q += sign * next;
        }
        term = next;
        k += 1.0;
    }
    let (s, c) = z.sin_cos();
    // cos(z − π/4) = (cos z + sin z)/√2, sin(z − π/4) = (sin z − cos z)/√2.
    let cos_chi = (c + s) * std::f64::consts::FRAC_1_SQRT_2;
    let sin_chi = (s - c) * std::f64::consts::FRAC_1_SQRT_2;
    (2.0 / (std::f64::consts::PI * z)).sqrt() * (p * cos_chi + q * sin_chi)
}

/// Bessel function of the first kind `J₀(z)`.
pub fn bessel_j0(z: f64) -> f64 {
    let az = z.abs();
    if az < J0_SERIES_LIMIT {
        j0_series(az)
    } else if az < J0_ASYMPTOTIC_LIMIT {
        j0_miller(az)
    } else {
        j0_asymptotic(az)
    }
}

/// `I₀(√q)` for `q ≥ 0` and `J₀(√−q)` for `q < 0`, i.e. `I₀` of the
/// principal square root continued through the imaginary axis. Returned
/// as `(log_scale, mantissa)` with value `e^{log_scale} · mantissa`.
pub fn i0_sqrt_arg(q: f64) -> (f64, f64) {
    if q >= 0.0 {
        let z = q.sqrt();
        (z, bessel_i0_scaled(z))
    } else {
        (0.0, bessel_j0((-q).sqrt()))
    }
}
