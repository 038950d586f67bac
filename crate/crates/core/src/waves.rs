//! Exact travelling waves of the reduced sine-Gordon equation
//! `w_xx − w_tt − a w_t = sin w + γ` (unit wave speed).
//!
//! Every wave depends on `(x, t)` only through `ξ = (x − t)/a`, so
//! `w_xx − w_tt` cancels and the equation reduces to the profile ODE
//! `φ'(ξ) = sin φ + γ`. Writing `φ = 2 arctan T(ξ)` turns that into the
//! Riccati equation `T' = (γ/2) T² + T + γ/2`, whose closed-form solutions
//! give the four regimes below.
//!
//! Derivatives are taken analytically from the closed forms through the
//! chain rule for `2 arctan T`; finite differences appear only in tests.
//!
//! Branch convention: `arctan` is the principal branch, so for the
//! `γ ≠ 0` regimes `w` is continuous only between consecutive singular
//! points (poles of `T`), where it jumps by `2π`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{PsgeError, Result};

/// Distance to a singular locus below which evaluation is refused.
const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// γ = 0: `w = Π(ξ + k)`.
    GammaZero,
    /// γ² = 1: `w = 2 arctan(−(1/γ)(1 + 2/ξ̄))`, `ξ̄ = ξ − k`.
    GammaOne,
    /// γ² < 1, γ ≠ 0: exponential family with rate `α = √(1 − γ²)`.
    GammaSub,
    /// γ² > 1: periodic family with `σ = √(γ² − 1)`.
    GammaSuper,
}

/// Lobachevsky angle of parallelism in the convention `Π(ψ) = 2 arctan e^ψ`,
/// `Π(ψ) = π − Π(−ψ)`. Lies in `(0, π)` and `sin Π(ψ) = sech ψ`.
pub fn parallelism_angle(psi: f64) -> f64 {
    if psi >= 0.0 {
        PI - 2.0 * (-psi).exp().atan()
    } else {
        2.0 * psi.exp().atan()
    }
}

fn sech(x: f64) -> f64 {
    let ax = x.abs();
    if ax > 700.0 {
        0.0
    } else {
        let e = (-ax).exp();
        2.0 * e / (1.0 + e * e)
    }
}

/// Profile `φ(ξ)` with its first three derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    pub phi: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

/// Space-time derivatives of a travelling wave at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveDerivatives {
    pub w_t: f64,
    pub w_x: f64,
    pub w_xx: f64,
    pub w_tt: f64,
    pub w_xxt: f64,
}

/// A closed-form travelling wave of the reduced equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TravellingWave {
    regime: Regime,
    gamma: f64,
    a: f64,
    k_const: f64,
}

impl TravellingWave {
    /// Picks the regime from `gamma`. For the γ² < 1 family the integration
    /// constant must be nonzero.
    pub fn new(gamma: f64, a: f64, k_const: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(PsgeError::invalid(
                "a",
                format!("must be finite and > 0, got {a}"),
            ));
        }
        if !gamma.is_finite() || !k_const.is_finite() {
            return Err(PsgeError::invalid("gamma", "gamma and k must be finite"));
        }
        let g2 = gamma * gamma;
        let regime = if gamma == 0.0 {
            Regime::GammaZero
        } else if g2 == 1.0 {
            Regime::GammaOne
        } else if g2 < 1.0 {
            if k_const == 0.0 {
                return Err(PsgeError::invalid("k", "the γ² < 1 family needs k ≠ 0"));
            }
            Regime::GammaSub
        } else {
            Regime::GammaSuper
        };
        Ok(TravellingWave {
            regime,
            gamma,
            a,
            k_const,
        })
    }

    /// The kink `2 arctan e^{(x−t)/a}`.
    pub fn kink(a: f64) -> Result<Self> {
        TravellingWave::new(0.0, a, 0.0)
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn k_const(&self) -> f64 {
        self.k_const
    }

    /// `√(1 − γ²)`, defined for the γ² < 1 family.
    pub fn alpha(&self) -> Option<f64> {
        (self.regime == Regime::GammaSub).then(|| (1.0 - self.gamma * self.gamma).sqrt())
    }

    /// `√(γ² − 1)`, defined for the γ² > 1 family.
    pub fn sigma(&self) -> Option<f64> {
        (self.regime == Regime::GammaSuper).then(|| (self.gamma * self.gamma - 1.0).sqrt())
    }

    pub fn xi_of(&self, x: f64, t: f64) -> f64 {
        (x - t) / self.a
    }

    /// The profile and its derivatives in `ξ`.
    pub fn profile(&self, xi: f64) -> Result<Profile> {
        let g = self.gamma;
        let k = self.k_const;
        let (t, t1, t2, t3) = match self.regime {
            Regime::GammaZero => {
                let psi = xi + k;
                let s = sech(psi);
                let th = psi.tanh();
                return Ok(Profile {
                    phi: parallelism_angle(psi),
                    d1: s,
                    d2: -s * th,
                    d3: s * (1.0 - 2.0 * s * s),
                });
            }
            Regime::GammaOne => {
                let xb = xi - k;
                if xb.abs() < SINGULAR_TOL {
                    return Err(PsgeError::Domain(format!(
                        "γ = {g} wave is singular at ξ − k = 0 (ξ = {xi})"
                    )));
                }
                (
                    -(1.0 + 2.0 / xb) / g,
                    2.0 / (g * xb * xb),
                    -4.0 / (g * xb.powi(3)),
                    12.0 / (g * xb.powi(4)),
                )
            }
            Regime::GammaSub => {
                let alpha = (1.0 - g * g).sqrt();
                let e = k * (alpha * xi).exp();
                let den = 1.0 - e;
                if den.abs() < SINGULAR_TOL || !e.is_finite() {
                    return Err(PsgeError::Domain(format!(
                        "γ = {g} wave is singular where k e^(αξ) = 1 (ξ = {xi})"
                    )));
                }
                let amp = alpha / g;
                (
                    amp * ((1.0 + e) / den - 1.0 / alpha),
                    2.0 * alpha * alpha / g * e / (den * den),
                    2.0 * alpha.powi(3) / g * e * (1.0 + e) / den.powi(3),
                    2.0 * alpha.powi(4) / g * e * (1.0 + 4.0 * e + e * e) / den.powi(4),
                )
            }
            Regime::GammaSuper => {
                let sigma = (g * g - 1.0).sqrt();
                let theta = 0.5 * sigma * xi + k;
                let cos = theta.cos();
                if cos.abs() < SINGULAR_TOL {
                    return Err(PsgeError::Domain(format!(
                        "γ = {g} wave hits a tangent pole at σξ/2 + k = {theta}"
                    )));
                }
                let tan = theta.tan();
                let sec2 = 1.0 / (cos * cos);
                (
                    (sigma * tan - 1.0) / g,
                    sigma * sigma / (2.0 * g) * sec2,
                    sigma.powi(3) / (2.0 * g) * sec2 * tan,
                    sigma.powi(4) / (4.0 * g) * sec2 * (1.0 + 3.0 * tan * tan),
                )
            }
        };
        // φ = 2 arctan T and its derivatives in T
        let q = 1.0 + t * t;
        let g1 = 2.0 / q;
        let g2 = -4.0 * t / (q * q);
        let g3 = (12.0 * t * t - 4.0) / (q * q * q);
        Ok(Profile {
            phi: 2.0 * t.atan(),
            d1: g1 * t1,
            d2: g2 * t1 * t1 + g1 * t2,
            d3: g3 * t1.powi(3) + 3.0 * g2 * t1 * t2 + g1 * t3,
        })
    }

    pub fn value(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self.profile(self.xi_of(x, t))?.phi)
    }

    /// `w_x = φ'/a`, `w_t = −φ'/a`, `w_xx = w_tt = φ''/a²`, `w_xxt = −φ'''/a³`.
    pub fn derivatives(&self, x: f64, t: f64) -> Result<WaveDerivatives> {
        let p = self.profile(self.xi_of(x, t))?;
        let a = self.a;
        Ok(WaveDerivatives {
            w_t: -p.d1 / a,
            w_x: p.d1 / a,
            w_xx: p.d2 / (a * a),
            w_tt: p.d2 / (a * a),
            w_xxt: -p.d3 / (a * a * a),
        })
    }
}

/// How [`reduced_residual`] obtains the derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResidualMode {
    Analytic,
    /// Central differences of `wave_value` with step `h` in both variables.
    FiniteDifference {
        h: f64,
    },
}

/// `w_xx − w_tt − a w_t − sin w − γ`.
pub fn reduced_residual(wave: &TravellingWave, x: f64, t: f64, mode: ResidualMode) -> Result<f64> {
    let w = wave.value(x, t)?;
    let (w_xx, w_tt, w_t) = match mode {
        ResidualMode::Analytic => {
            let d = wave.derivatives(x, t)?;
            (d.w_xx, d.w_tt, d.w_t)
        }
        ResidualMode::FiniteDifference { h } => {
            if !(h > 0.0) {
                return Err(PsgeError::invalid(
                    "h",
                    "finite-difference step must be > 0",
                ));
            }
            let xp = wave.value(x + h, t)?;
            let xm = wave.value(x - h, t)?;
            let tp = wave.value(x, t + h)?;
            let tm = wave.value(x, t - h)?;
            (
                (xp - 2.0 * w + xm) / (h * h),
                (tp - 2.0 * w + tm) / (h * h),
                (tp - tm) / (2.0 * h),
            )
        }
    };
    Ok(w_xx - w_tt - wave.a * w_t - w.sin() - wave.gamma)
}

/// `φ'(ξ) − sin φ − γ`, the one-dimensional reduction of the residual.
pub fn profile_ode_residual(wave: &TravellingWave, xi: f64) -> Result<f64> {
    let p = wave.profile(xi)?;
    Ok(p.d1 - p.phi.sin() - wave.gamma)
}

/// Initial data `(w(x,0), w_t(x,0))` of the kink:
/// `2 arctan e^{x/a}` and `−(2/a) e^{x/a} / (1 + e^{2x/a})`.
pub fn kink_initial_data(a: f64) -> Result<(impl Fn(f64) -> f64, impl Fn(f64) -> f64)> {
    if !(a.is_finite() && a > 0.0) {
        return Err(PsgeError::invalid(
            "a",
            format!("must be finite and > 0, got {a}"),
        ));
    }
    let f0 = move |x: f64| parallelism_angle(x / a);
    let f1 = move |x: f64| -sech(x / a) / a;
    Ok((f0, f1))
}

/// `|e^ξ (e^{4ξ} − 6e^{2ξ} + 1)| / (e^{2ξ} + 1)³`, the shape of the kink's
/// `|w_xxt|` without the `2/a³` prefactor. Even in ξ.
pub fn kink_w_xxt_shape(xi: f64) -> f64 {
    let s = sech(xi);
    0.5 * (s * (1.0 - 2.0 * s * s)).abs()
}

/// `β = sup_ξ |w_xxt|` for the kink with damping `a`.
///
/// Dense scan of the even shape function on `[0, 20]` followed by a
/// golden-section refinement around the best sample.
pub fn w_xxt_bound(a: f64) -> Result<f64> {
    if !(a.is_finite() && a > 0.0) {
        return Err(PsgeError::invalid(
            "a",
            format!("must be finite and > 0, got {a}"),
        ));
    }
    const STEP: f64 = 1e-3;
    let n = (20.0 / STEP) as usize;
    let (mut best_i, mut best) = (0usize, kink_w_xxt_shape(0.0));
    for i in 1..=n {
        let g = kink_w_xxt_shape(i as f64 * STEP);
        if g > best {
            best = g;
            best_i = i;
        }
    }
    let lo = (best_i as f64 - 1.0).max(0.0) * STEP;
    let hi = (best_i as f64 + 1.0) * STEP;
    let refined = golden_max(kink_w_xxt_shape, lo, hi, 1e-12);
    Ok(2.0 / a.powi(3) * best.max(refined))
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = f(d);
        }
    }
    f(lo).max(f(hi)).max(fc).max(fd)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallelism_angle_basics() {
        assert!((parallelism_angle(0.0) - PI / 2.0).abs() < 1e-16);
        let s = parallelism_angle(1.0).sin();
        assert!((s - 1.0 / 1f64.cosh()).abs() < 1e-15);
        assert!((s - 0.648_054_273_663_885_4).abs() < 1e-12);
        for psi in [-30.0, -1.5, 0.2, 7.0] {
            let p = parallelism_angle(psi);
            assert!(p > 0.0 && p < PI);
            assert!((p + parallelism_angle(-psi) - PI).abs() < 1e-15);
        }
    }

    #[test]
    fn regime_selection() {
        assert_eq!(
            TravellingWave::new(0.0, 1.0, 0.0).unwrap().regime(),
            Regime::GammaZero
        );
        assert_eq!(
            TravellingWave::new(1.0, 1.0, 0.0).unwrap().regime(),
            Regime::GammaOne
        );
        assert_eq!(
            TravellingWave::new(-1.0, 1.0, 0.0).unwrap().regime(),
            Regime::GammaOne
        );
        let sub = TravellingWave::new(0.5, 1.0, 0.3).unwrap();
        assert_eq!(sub.regime(), Regime::GammaSub);
        let alpha = sub.alpha().unwrap();
        assert!((alpha * alpha + 0.25 - 1.0).abs() < 1e-15);
        let sup = TravellingWave::new(1.25, 1.0, 0.1).unwrap();
        assert!((sup.sigma().unwrap().powi(2) - (1.5625 - 1.0)).abs() < 1e-15);
        assert!(TravellingWave::new(0.5, 1.0, 0.0).is_err());
        assert!(TravellingWave::new(0.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn kink_values_and_limits() {
        let w = TravellingWave::kink(1.0).unwrap();
        assert!((w.value(0.0, 0.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((w.value(30.0, 0.0).unwrap() - PI).abs() < 1e-10);
        assert!(w.value(-30.0, 0.0).unwrap().abs() < 1e-10);
    }

    #[test]
    fn gamma_one_value_and_pole() {
        let w = TravellingWave::new(1.0, 1.0, 0.0).unwrap();
        // ξ̄ = −1 gives 2 arctan(1)
        assert!((w.value(-1.0, 0.0).unwrap() - PI / 2.0).abs() < 1e-15);
        assert!(matches!(w.value(0.0, 0.0), Err(PsgeError::Domain(_))));
        // ξ̄ = −2: w = 0 and the profile ODE still holds
        assert!(w.value(-2.0, 0.0).unwrap().abs() < 1e-15);
        assert!(profile_ode_residual(&w, -2.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn kink_w_xxt_at_center() {
        for a in [0.5, 1.0, 2.0] {
            let d = TravellingWave::kink(a)
                .unwrap()
                .derivatives(1.3, 1.3)
                .unwrap();
            assert!((d.w_xxt - 1.0 / a.powi(3)).abs() < 1e-14);
        }
    }

    #[test]
    fn initial_data_match_wave() {
        for a in [0.5, 1.0, 3.0] {
            let (f0, f1) = kink_initial_data(a).unwrap();
            assert!((f0(0.0) - PI / 2.0).abs() < 1e-15);
            assert!((f1(0.0) + 1.0 / a).abs() < 1e-15);
            assert!((f0(200.0) - PI).abs() < 1e-12);
            let w = TravellingWave::kink(a).unwrap();
            for x in [-3.0, -0.2, 0.7, 5.0] {
                assert_eq!(f0(x), w.value(x, 0.0).unwrap());
                assert!((f1(x) - w.derivatives(x, 0.0).unwrap().w_t).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn beta_for_unit_damping() {
        assert!((w_xxt_bound(1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!(w_xxt_bound(0.0).is_err());
    }
}
