//! Fundamental solution `K` of `L u = ε u_xxt + c² u_xx − u_tt − a u_t`.
//!
//! With `A = εs + c²`, `B = s(s + a)`, the Laplace transform in time is
//! `K̂(x, s) = e^{−|x|√(B/A)} / (2√(AB))`. Writing `r = |x|/√ε` and
//! `b = c²/ε` factors it as `K̂ = Ĝ(r, s)/√s` with
//! `Ĝ(r, s) = e^{−r√(s(s+a)/(s+b))} / (2√ε √((s+a)(s+b)))`.
//!
//! `K` is the fundamental solution of `−L`: `L K = −δ(x)δ(t)`. Its space
//! integral is `(1 − e^{−at})/a`.
//!
//! Time-domain values come from the `z = y²` form of the inverse transform
//! of `Ĝ`,
//!
//! `G(r,t) = 1/(4√(πεt)) ∫₀^∞ 2y e^{−(y²+r²)/4t − bty²/(y²+r²)} I₀(√(b−a) y) / √(y²+r²) dy`,
//!
//! (with `I₀(√(b−a) y)` read as `J₀(√(a−b) y)` when `a > b`), and from
//! `K(x,t) = ∫₀^t G(r,τ)/√(π(t−τ)) dτ = (2/√π) ∫₀^{√t} G(r, t−u²) du`.

use std::cell::Cell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PsgeError, Result};
use crate::model::MediumParams;
use crate::quad::{integrate, QuadratureSpec};
use crate::specfun::{bessel_i0_scaled, bessel_j0};

/// Medium constants with the kernel's derived scalings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub medium: MediumParams,
}

impl KernelParams {
    pub fn new(medium: MediumParams) -> Result<Self> {
        medium.validate()?;
        Ok(KernelParams { medium })
    }

    pub fn epsilon(&self) -> f64 {
        self.medium.epsilon
    }

    pub fn a(&self) -> f64 {
        self.medium.a
    }

    pub fn c(&self) -> f64 {
        self.medium.c
    }

    pub fn b(&self) -> f64 {
        self.medium.b()
    }

    /// `r = |x|/√ε`.
    pub fn r_of(&self, x: f64) -> f64 {
        x.abs() / self.medium.epsilon.sqrt()
    }

    /// Abscissa of the convergence half-plane, `max(−a, −b)`.
    pub fn abscissa(&self) -> f64 {
        (-self.a()).max(-self.b())
    }
}

impl From<MediumParams> for KernelParams {
    fn from(medium: MediumParams) -> Self {
        KernelParams { medium }
    }
}

fn check_frequency(s: Complex64, p: &KernelParams) -> Result<()> {
    if !(s.re.is_finite() && s.im.is_finite()) {
        return Err(PsgeError::Domain(format!("non-finite frequency {s}")));
    }
    if s.re <= p.abscissa() {
        return Err(PsgeError::Domain(format!(
            "Re s = {} outside the half-plane Re s > {}",
            s.re,
            p.abscissa()
        )));
    }
    for (name, bp) in [("0", 0.0), ("−a", -p.a()), ("−b", -p.b())] {
        if (s - bp).norm() <= 1e-14 * (1.0 + bp.abs()) {
            return Err(PsgeError::Domain(format!(
                "s = {s} is the branch point {name}"
            )));
        }
    }
    Ok(())
}

/// `K̂(x, s)` with principal square roots.
pub fn k_hat(x: f64, s: Complex64, p: &KernelParams) -> Result<Complex64> {
    check_frequency(s, p)?;
    let big_a = p.epsilon() * s + p.c() * p.c();
    let rs = s.sqrt();
    let rsa = (s + p.a()).sqrt();
    let ra = big_a.sqrt();
    let exponent = -x.abs() * rs * rsa / ra;
    Ok(exponent.exp() / (2.0 * rs * rsa * ra))
}

/// `Ĝ(r, s)` with principal square roots.
pub fn g_hat(r: f64, s: Complex64, p: &KernelParams) -> Result<Complex64> {
    check_frequency(s, p)?;
    if !(r >= 0.0) {
        return Err(PsgeError::invalid("r", format!("must be ≥ 0, got {r}")));
    }
    let rs = s.sqrt();
    let rsa = (s + p.a()).sqrt();
    let rsb = (s + p.b()).sqrt();
    let exponent = -r * rs * rsa / rsb;
    Ok(exponent.exp() / (2.0 * p.epsilon().sqrt() * rsa * rsb))
}

/// Runs `body` with a slot that closures can use to park the first error
/// they hit (returning NaN to the quadrature); the parked error wins over
/// the resulting `NonFinite`.
fn with_error_slot<T>(body: impl FnOnce(&Cell<Option<PsgeError>>) -> Result<T>) -> Result<T> {
    let slot = Cell::new(None);
    let out = body(&slot);
    match slot.take() {
        Some(e) => Err(e),
        None => out,
    }
}

fn park(slot: &Cell<Option<PsgeError>>, e: PsgeError) -> f64 {
    let prev = slot.take();
    slot.set(Some(prev.unwrap_or(e)));
    f64::NAN
}

/// `G(0, t) = e^{−(a+b)t/2} I₀((b−a)t/2) / (2√ε)`.
pub fn g_time_origin(t: f64, p: &KernelParams) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(PsgeError::invalid(
            "t",
            format!("must be finite and ≥ 0, got {t}"),
        ));
    }
    let (a, b) = (p.a(), p.b());
    let z = 0.5 * (b - a).abs() * t;
    Ok((-a.min(b) * t).exp() * bessel_i0_scaled(z) / (2.0 * p.epsilon().sqrt()))
}

/// Pieces of the `y`-integrand of `G`. The exponent is split as
/// `constant() + log_envelope(y)` with the square completed, so that large
/// `bt` or `r²/t` do not cancel inside the integrand.
struct GIntegrand {
    r: f64,
    t: f64,
    bt: f64,
    q: f64,
    sq: f64,
    peak: f64,
}

impl GIntegrand {
    fn new(r: f64, t: f64, p: &KernelParams) -> Self {
        let q = p.b() - p.a();
        let sq = q.abs().sqrt();
        GIntegrand {
            r,
            t,
            bt: p.b() * t,
            q,
            sq,
            peak: if q > 0.0 { 2.0 * t * sq } else { 0.0 },
        }
    }

    /// `−r²/4t − bt (+ (b−a)t when b > a)`.
    fn constant(&self) -> f64 {
        let base = -self.r * self.r / (4.0 * self.t) - self.bt;
        if self.q > 0.0 {
            base + self.q * self.t
        } else {
            base
        }
    }

    fn log_envelope(&self, y: f64) -> f64 {
        let r2 = self.r * self.r;
        let s2 = y * y + r2;
        let (ratio, near) = if self.r == 0.0 {
            (2.0, 0.0)
        } else {
            (2.0 * y / s2.sqrt(), self.bt * r2 / s2)
        };
        let d = y - self.peak;
        let mut e = -d * d / (4.0 * self.t) + near + ratio.ln();
        if self.q > 0.0 {
            e += bessel_i0_scaled(self.sq * y).ln();
        }
        e
    }

    fn oscillatory(&self, y: f64) -> f64 {
        if self.q < 0.0 {
            bessel_j0(self.sq * y)
        } else {
            1.0
        }
    }

    /// Peak of the envelope when `y ≫ r`.
    fn gaussian_peak(&self) -> f64 {
        self.peak
    }
}

/// `G(r, t)` by adaptive quadrature of the `y`-form.
pub fn g_time(r: f64, t: f64, p: &KernelParams, quad: &QuadratureSpec) -> Result<f64> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(PsgeError::invalid(
            "r",
            format!("must be finite and ≥ 0, got {r}"),
        ));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(PsgeError::invalid(
            "t",
            format!("must be finite and > 0, got {t}"),
        ));
    }
    let g = GIntegrand::new(r, t, p);
    let width = (2.0 * t).sqrt();
    let log_thr = quad.truncation_threshold.ln();

    // Scan for the envelope maximum and a cut point past the tail.
    let mut y_hi = r + g.gaussian_peak() + 12.0 * width;
    let (mut peak_y, mut peak) = (0.0, f64::NEG_INFINITY);
    let scan = |lo: f64, hi: f64, n: usize, peak_y: &mut f64, peak: &mut f64| {
        for i in 0..=n {
            let y = lo + (hi - lo) * i as f64 / n as f64;
            let e = g.log_envelope(y);
            if e > *peak {
                *peak = e;
                *peak_y = y;
            }
        }
    };
    scan(0.0, y_hi, 400, &mut peak_y, &mut peak);
    // Near-field bump at y ~ r/√(bt), narrow when bt is large.
    let y_near = r / (1.0 + g.bt).sqrt();
    if r > 0.0 {
        for i in 0..=120 {
            let y = r * 10f64.powf(-8.0 + 8.0 * i as f64 / 120.0);
            let e = g.log_envelope(y);
            if e > peak {
                peak = e;
                peak_y = y;
            }
        }
    }
    if !peak.is_finite() {
        return if peak == f64::NEG_INFINITY {
            Ok(0.0)
        } else {
            Err(PsgeError::NonFinite(format!("G({r}, {t}) envelope")))
        };
    }
    let mut grow = 0;
    while g.log_envelope(y_hi) - peak > log_thr {
        let lo = y_hi;
        y_hi *= 2.0;
        scan(lo, y_hi, 200, &mut peak_y, &mut peak);
        grow += 1;
        if grow > 60 {
            return Err(PsgeError::Truncation {
                value: (g.log_envelope(y_hi) - peak).exp(),
                cut: y_hi,
            });
        }
    }

    let mut bps = vec![
        r,
        g.gaussian_peak(),
        peak_y,
        0.5 * y_near,
        y_near,
        2.0 * y_near,
    ];
    for k in [1.0, 3.0, 6.0] {
        bps.push(peak_y - k * width);
        bps.push(peak_y + k * width);
    }
    let f = |y: f64| (g.log_envelope(y) - peak).exp() * g.oscillatory(y);
    let res = integrate(f, 0.0, y_hi, &bps, quad)?;
    let pref = (g.constant() + peak).exp() / (4.0 * (PI * p.epsilon() * t).sqrt());
    Ok(pref * res.value)
}

/// `K(x, t) = (2/√π) ∫₀^{√t} G(r, t − u²) du`.
pub fn k_time(x: f64, t: f64, p: &KernelParams, quad: &QuadratureSpec) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(PsgeError::invalid(
            "t",
            format!("must be finite and > 0, got {t}"),
        ));
    }
    if !x.is_finite() {
        return Err(PsgeError::invalid("x", "must be finite"));
    }
    let r = p.r_of(x);
    let inner = quad.tightened(0.1);
    let st = t.sqrt();
    let mut bps = Vec::new();
    let front = x.abs() / p.c();
    if front < t {
        let wf = (p.epsilon() * t).sqrt() / p.c();
        for d in [-2.0 * wf, 0.0, 2.0 * wf] {
            let tau = front + d;
            if tau > 0.0 && tau < t {
                bps.push((t - tau).sqrt());
            }
        }
    }
    with_error_slot(|slot| {
        let f = |u: f64| {
            let tau = t - u * u;
            if tau <= 0.0 {
                return if r == 0.0 {
                    0.5 / p.epsilon().sqrt()
                } else {
                    0.0
                };
            }
            match g_time(r, tau, p, &inner) {
                Ok(v) => v,
                Err(e) => park(slot, e),
            }
        };
        let res = integrate(f, 0.0, st, &bps, quad)?;
        Ok(2.0 / PI.sqrt() * res.value)
    })
}

/// `K(0, t) = ½ ∫₀^t e^{−(a+b)τ/2} I₀((b−a)τ/2) / √(πε(t−τ)) dτ` using the
/// closed form of `G(0, ·)`.
pub fn k_origin(t: f64, p: &KernelParams, quad: &QuadratureSpec) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(PsgeError::invalid(
            "t",
            format!("must be finite and > 0, got {t}"),
        ));
    }
    with_error_slot(|slot| {
        let f = |u: f64| match g_time_origin((t - u * u).max(0.0), p) {
            Ok(v) => v,
            Err(e) => park(slot, e),
        };
        let res = integrate(f, 0.0, t.sqrt(), &[], quad)?;
        Ok(2.0 / PI.sqrt() * res.value)
    })
}

/// Worst relative error between `∫₀^∞ e^{−st} G(r,t) dt` and `Ĝ(r, s)` over
/// the real samples `s`.
pub fn verify_laplace_pair(
    r: f64,
    s_samples: &[f64],
    p: &KernelParams,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if s_samples.is_empty() {
        return Err(PsgeError::invalid(
            "s_samples",
            "need at least one frequency",
        ));
    }
    // For r > 0, G has a t^{-3/2} tail (Ĝ branches at s = 0), so only
    // e^{-st} helps; at r = 0 the decay is e^{-min(a,b) t}.
    let decay = if r == 0.0 { p.a().min(p.b()) } else { 0.0 };
    let inner = quad.tightened(0.1);
    let mut worst = 0.0_f64;
    for &s in s_samples {
        if !(s > p.abscissa() + 0.1) {
            return Err(PsgeError::Domain(format!(
                "s = {s} is within 0.1 of the abscissa {}",
                p.abscissa()
            )));
        }
        let exact = g_hat(r, Complex64::new(s, 0.0), p)?.re;
        let rate = s + decay;
        if rate <= 0.0 {
            return Err(PsgeError::Domain(format!(
                "Laplace integral of G({r}, ·) diverges at s = {s}"
            )));
        }
        let cut = -quad.truncation_threshold.ln() / rate;
        let g_at = |t: f64| -> Result<f64> {
            if r == 0.0 {
                g_time_origin(t, p)
            } else {
                g_time(r, t, p, &inner)
            }
        };
        let tail = (-s * cut).exp() * g_at(cut)?;
        if tail.abs() > quad.abs_tol.max(quad.rel_tol * exact.abs()) {
            return Err(PsgeError::Truncation { value: tail, cut });
        }
        let scale = r * r * p.epsilon() / p.c().powi(2).max(1e-300);
        let mut bps: Vec<f64> = [1e-3, 1e-2, 1e-1].iter().map(|f| f * cut).collect();
        for m in [0.25, 1.0, 4.0] {
            bps.push(m * scale.sqrt());
        }
        let num = with_error_slot(|slot| {
            let f = |t: f64| {
                if t <= 0.0 {
                    return if r == 0.0 {
                        g_time_origin(0.0, p).unwrap_or(f64::NAN)
                    } else {
                        0.0
                    };
                }
                match g_at(t) {
                    Ok(v) => (-s * t).exp() * v,
                    Err(e) => park(slot, e),
                }
            };
            Ok(integrate(f, 0.0, cut, &bps, quad)?.value)
        })?;
        worst = worst.max((num - exact).abs() / exact.abs());
    }
    Ok(worst)
}

/// Half-width beyond which `K(·, t)` is below `threshold` relative to its
/// value at the front; grows geometrically from the cone radius.
fn spatial_cut(t: f64, p: &KernelParams, quad: &QuadratureSpec) -> Result<f64> {
    let front = p.c() * t;
    let diff = (p.epsilon() * t).sqrt();
    let reference = k_time(front, t, p, quad)?
        .abs()
        .max(k_time(0.0, t, p, quad)?.abs());
    let mut y = front + 12.0 * diff + 1.0;
    for _ in 0..40 {
        if k_time(y, t, p, quad)?.abs() <= quad.truncation_threshold * reference {
            return Ok(y);
        }
        y *= 1.5;
    }
    Err(PsgeError::Truncation {
        value: k_time(y, t, p, quad)?,
        cut: y,
    })
}

/// `2 ∫₀^∞ K(y, t) dy` by quadrature over the truncated half-line.
pub fn kernel_mass(t: f64, p: &KernelParams, quad: &QuadratureSpec) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(PsgeError::invalid(
            "t",
            format!("must be finite and > 0, got {t}"),
        ));
    }
    let cut = spatial_cut(t, p, quad)?;
    let front = p.c() * t;
    let diff = (p.epsilon() * t).sqrt();
    let bps = [front - 3.0 * diff, front, front + 3.0 * diff];
    let inner = quad.tightened(0.1);
    with_error_slot(|slot| {
        let f = |y: f64| match k_time(y, t, p, &inner) {
            Ok(v) => v,
            Err(e) => park(slot, e),
        };
        Ok(2.0 * integrate(f, 0.0, cut, &bps, quad)?.value)
    })
}

/// `(1 − e^{−at})/a`.
pub fn kernel_mass_exact(t: f64, a: f64) -> f64 {
    -(-a * t).exp_m1() / a
}

/// `2 ∫₀^∞ K̂(y, s) dy` for real `s`, which should equal `1/(s² + as)`.
pub fn kernel_mass_laplace(s: f64, p: &KernelParams, quad: &QuadratureSpec) -> Result<f64> {
    let s_c = Complex64::new(s, 0.0);
    let k0 = k_hat(0.0, s_c, p)?.re;
    let rate = (s * (s + p.a()) / (p.epsilon() * s + p.c() * p.c())).sqrt();
    let cut = -quad.truncation_threshold.ln() / rate;
    with_error_slot(|slot| {
        let f = |y: f64| match k_hat(y, s_c, p) {
            Ok(v) => v.re / k0,
            Err(e) => park(slot, e),
        };
        Ok(2.0 * k0 * integrate(f, 0.0, cut, &[], quad)?.value)
    })
}

/// Finite-difference residual of `ε K_xxt + c² K_xx − K_tt − a K_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeResidual {
    pub value: f64,
    /// Rough size of the quadrature noise amplified by the stencil.
    pub noise_floor: f64,
}

impl PdeResidual {
    /// False when the residual is dominated by quadrature noise, i.e. the
    /// step is too small for the kernel's accuracy.
    pub fn is_conditioned(&self) -> bool {
        self.value.abs() > 10.0 * self.noise_floor
    }
}

/// Central-difference residual on a 3×3 stencil of step `h`.
pub fn pde_residual(
    x: f64,
    t: f64,
    p: &KernelParams,
    h: f64,
    quad: &QuadratureSpec,
) -> Result<PdeResidual> {
    if !(h > 0.0) {
        return Err(PsgeError::invalid("h", "step must be > 0"));
    }
    if x == 0.0 {
        return Err(PsgeError::Domain(
            "residual is taken away from x = 0".into(),
        ));
    }
    if !(t > 2.0 * h) {
        return Err(PsgeError::Domain(format!(
            "need t > 2h, got t = {t}, h = {h}"
        )));
    }
    let mut k = [[0.0; 3]; 3];
    for (i, row) in k.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = k_time(x + (i as f64 - 1.0) * h, t + (j as f64 - 1.0) * h, p, quad)?;
        }
    }
    let h2 = h * h;
    let kxx = |j: usize| (k[2][j] - 2.0 * k[1][j] + k[0][j]) / h2;
    let k_xx = kxx(1);
    let k_xxt = (kxx(2) - kxx(0)) / (2.0 * h);
    let k_t = (k[1][2] - k[1][0]) / (2.0 * h);
    let k_tt = (k[1][2] - 2.0 * k[1][1] + k[1][0]) / h2;
    let (eps, a, c) = (p.epsilon(), p.a(), p.c());
    let value = eps * k_xxt + c * c * k_xx - k_tt - a * k_t;
    let kmax = k.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    let noise = (quad.abs_tol + quad.rel_tol * kmax).max(f64::EPSILON * kmax);
    let noise_floor = noise * (4.0 * eps / (h2 * h) + 4.0 * (c * c + 1.0) / h2 + a / h);
    Ok(PdeResidual { value, noise_floor })
}

/// One row of a kernel dump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub x: f64,
    pub t: f64,
    pub k: f64,
}

/// `K` on the tensor grid `xs × ts` (all `t > 0`), ordered by `t` then `x`.
pub fn k_time_grid(
    xs: &[f64],
    ts: &[f64],
    p: &KernelParams,
    quad: &QuadratureSpec,
) -> Result<Vec<KernelSample>> {
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .flat_map(|&t| xs.iter().map(move |&x| (x, t)))
        .collect();
    pts.par_iter()
        .map(|&(x, t)| k_time(x, t, p, quad).map(|k| KernelSample { x, t, k }))
        .collect()
}
