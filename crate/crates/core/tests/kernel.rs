#![allow(clippy::excessive_precision)]

mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use psge_core::kernel::{
    g_hat, g_time, g_time_origin, k_hat, k_origin, k_time, kernel_mass, kernel_mass_exact,
    kernel_mass_laplace, pde_residual, verify_laplace_pair, KernelParams,
};
use psge_core::model::MediumParams;
use psge_core::quad::QuadratureSpec;
use psge_core::PsgeError;

use common::{g_talbot, k_talbot, rel, talbot};

fn params(eps: f64, a: f64, c: f64) -> KernelParams {
    KernelParams::new(MediumParams::new(eps, a, c, 0.0).unwrap()).unwrap()
}

fn tight() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        ..Default::default()
    }
}

/// `(ε, a, c, r, t, G)` from a 40-digit Talbot inversion of the closed-form transform.
const G_REF: [(f64, f64, f64, f64, f64, f64); 36] = [
    (0.1, 1.0, 1.0, 0.0, 0.3, 0.458591887382567185),
    (0.1, 1.0, 1.0, 0.0, 1.0, 0.112959014874395773),
    (0.1, 1.0, 1.0, 0.0, 3.0, 0.00863004367865940318),
    (0.1, 1.0, 1.0, 0.5, 0.3, 0.603444637041792631),
    (0.1, 1.0, 1.0, 0.5, 1.0, 0.144158168972983226),
    (0.1, 1.0, 1.0, 0.5, 3.0, 0.0131892254691750959),
    (0.1, 1.0, 1.0, 2.0, 0.3, 0.0581721241147159574),
    (0.1, 1.0, 1.0, 2.0, 1.0, 0.285674776822041999),
    (0.1, 1.0, 1.0, 2.0, 3.0, 0.0272458500405902766),
    (1.0, 1.0, 2.0, 0.0, 0.3, 0.248292236631602835),
    (1.0, 1.0, 2.0, 0.0, 1.0, 0.0675856353832249898),
    (1.0, 1.0, 2.0, 0.0, 3.0, 0.00483428146260284584),
    (1.0, 1.0, 2.0, 0.5, 0.3, 0.218543938819897414),
    (1.0, 1.0, 2.0, 0.5, 1.0, 0.0965873991600498568),
    (1.0, 1.0, 2.0, 0.5, 3.0, 0.00886967131502210666),
    (1.0, 1.0, 2.0, 2.0, 0.3, 0.00809447506138016583),
    (1.0, 1.0, 2.0, 2.0, 1.0, 0.0975741648593665194),
    (1.0, 1.0, 2.0, 2.0, 3.0, 0.0223040536222996334),
    (1.0, 1.0, 1.0, 0.0, 0.3, 0.370409110340858933),
    (1.0, 1.0, 1.0, 0.0, 1.0, 0.183939720585721161),
    (1.0, 1.0, 1.0, 0.0, 3.0, 0.0248935341839319715),
    (1.0, 1.0, 1.0, 0.5, 0.3, 0.216539377405602208),
    (1.0, 1.0, 1.0, 0.5, 1.0, 0.174570310403995269),
    (1.0, 1.0, 1.0, 0.5, 3.0, 0.042801773126330928),
    (1.0, 1.0, 1.0, 2.0, 0.3, 0.00465020870921986104),
    (1.0, 1.0, 1.0, 2.0, 1.0, 0.05605456396507416),
    (1.0, 1.0, 1.0, 2.0, 3.0, 0.0549017697494210608),
    (1.0, 4.0, 1.0, 0.0, 0.3, 0.248292236631602835),
    (1.0, 4.0, 1.0, 0.0, 1.0, 0.0675856353832249898),
    (1.0, 4.0, 1.0, 0.0, 3.0, 0.00483428146260284584),
    (1.0, 4.0, 1.0, 0.5, 0.3, 0.124627994476783827),
    (1.0, 4.0, 1.0, 0.5, 1.0, 0.0593856182169709741),
    (1.0, 4.0, 1.0, 0.5, 3.0, 0.0179909276639860282),
    (1.0, 4.0, 1.0, 2.0, 0.3, 0.00213889431736825666),
    (1.0, 4.0, 1.0, 2.0, 1.0, 0.0100419800140958337),
    (1.0, 4.0, 1.0, 2.0, 3.0, 0.0112877500237968633),
];

/// `(ε, a, c, x, t, K)` from the same inversion of `Ĝ/√s`.
const K_REF: [(f64, f64, f64, f64, f64, f64); 16] = [
    (0.1, 1.0, 1.0, 0.2, 0.5, 0.369315752498187492),
    (0.1, 1.0, 1.0, 0.2, 2.0, 0.235705560045708611),
    (0.1, 1.0, 1.0, 1.0, 0.5, 0.00623218151178188516),
    (0.1, 1.0, 1.0, 1.0, 2.0, 0.22056200966348485),
    (1.0, 1.0, 2.0, 0.2, 0.5, 0.181260735848703937),
    (1.0, 1.0, 2.0, 0.2, 2.0, 0.120855875356956852),
    (1.0, 1.0, 2.0, 1.0, 0.5, 0.0882749401137986263),
    (1.0, 1.0, 2.0, 1.0, 2.0, 0.117765831970542166),
    (1.0, 1.0, 1.0, 0.2, 0.5, 0.231057436402918772),
    (1.0, 1.0, 1.0, 0.2, 2.0, 0.240758274999304582),
    (1.0, 1.0, 1.0, 1.0, 0.5, 0.0698480063452767638),
    (1.0, 1.0, 1.0, 1.0, 2.0, 0.170745250206889561),
    (1.0, 4.0, 1.0, 0.2, 0.5, 0.143526669732250074),
    (1.0, 4.0, 1.0, 0.2, 2.0, 0.106556855492531707),
    (1.0, 4.0, 1.0, 1.0, 0.5, 0.0315780152138603315),
    (1.0, 4.0, 1.0, 1.0, 2.0, 0.0513298803553207884),
];

#[test]
fn talbot_oracle_inverts_known_pairs() {
    for t in [0.1, 1.0, 5.0] {
        let e = talbot(|s| 1.0 / (s + 1.0), t, 32);
        assert!(rel(e, (-t).exp()) < 1e-9, "t = {t}: {e}");
        let h = talbot(|s| 1.0 / s.sqrt(), t, 32);
        assert!(rel(h, 1.0 / (std::f64::consts::PI * t).sqrt()) < 1e-9);
    }
}

#[test]
fn talbot_oracle_agrees_with_frozen_references() {
    for (eps, a, c, r, t, want) in G_REF {
        assert!(
            rel(g_talbot(r, t, eps, a, c), want) < 1e-8,
            "G({r}, {t}) eps={eps} a={a} c={c}"
        );
    }
    for (eps, a, c, x, t, want) in K_REF {
        assert!(rel(k_talbot(x, t, eps, a, c), want) < 1e-8, "K({x}, {t})");
    }
}

#[test]
fn g_time_matches_references() {
    let q = QuadratureSpec::default();
    for (eps, a, c, r, t, want) in G_REF {
        let got = g_time(r, t, &params(eps, a, c), &q).unwrap();
        assert!(
            rel(got, want) < 1e-8,
            "G({r}, {t}) eps={eps} a={a} c={c}: {got} vs {want}"
        );
    }
}

#[test]
fn origin_closed_form_matches_references() {
    for (eps, a, c, _, t, want) in G_REF.iter().copied().filter(|row| row.3 == 0.0) {
        let got = g_time_origin(t, &params(eps, a, c)).unwrap();
        assert!(
            rel(got, want) < 1e-14,
            "G(0, {t}) eps={eps} a={a} c={c}: {got}"
        );
    }
}

#[test]
fn k_time_matches_references() {
    let q = QuadratureSpec::default();
    for (eps, a, c, x, t, want) in K_REF {
        let p = params(eps, a, c);
        let got = k_time(x, t, &p, &q).unwrap();
        assert!(
            rel(got, want) < 1e-7,
            "K({x}, {t}) eps={eps} a={a} c={c}: {got} vs {want}"
        );
        assert_eq!(got, k_time(-x, t, &p, &q).unwrap());
    }
}

#[test]
fn origin_half_order_integral_agrees_with_general_path() {
    for (eps, a, c) in [(0.1, 1.0, 1.0), (1.0, 4.0, 1.0), (1.0, 1.0, 2.0)] {
        let p = params(eps, a, c);
        for t in [0.2, 1.0, 3.0] {
            let k0 = k_origin(t, &p, &tight()).unwrap();
            let kt = k_time(0.0, t, &p, &tight()).unwrap();
            assert!(rel(k0, kt) < 1e-9, "t = {t}: {k0} vs {kt}");
            assert!(rel(k0, k_talbot(0.0, t, eps, a, c)) < 1e-8);
        }
    }
}

#[test]
fn transforms_agree_with_oracle_formulas() {
    let p = params(0.3, 1.5, 0.8);
    for s in [
        Complex64::new(0.7, 0.0),
        Complex64::new(2.0, 3.0),
        Complex64::new(-0.2, 5.0),
    ] {
        for x in [0.0, 0.4, 2.0] {
            let r = x / 0.3_f64.sqrt();
            let g = g_hat(r, s, &p).unwrap();
            let go = common::g_hat(r, s, 0.3, 1.5, 0.8);
            assert!((g - go).norm() <= 1e-14 * go.norm());
            let k = k_hat(x, s, &p).unwrap();
            let ko = common::k_hat(x, s, 0.3, 1.5, 0.8);
            assert!((k - ko).norm() <= 1e-14 * ko.norm());
        }
    }
}

#[test]
fn k_hat_unit_example() {
    // ε = a = c = 1, x = 1, s = 1: e^{-1}/4.
    let k = k_hat(1.0, Complex64::new(1.0, 0.0), &params(1.0, 1.0, 1.0)).unwrap();
    assert!((k.re - (-1.0f64).exp() / 4.0).abs() < 1e-15 && k.im == 0.0);
}

#[test]
fn branch_points_and_bad_arguments_are_rejected() {
    let p = params(1.0, 1.0, 2.0);
    assert!(matches!(
        g_hat(0.5, Complex64::new(-1.0, 0.0), &p),
        Err(PsgeError::Domain(_))
    ));
    assert!(matches!(
        g_hat(0.5, Complex64::new(-4.0, 0.0), &p),
        Err(PsgeError::Domain(_))
    ));
    assert!(k_time(0.5, 0.0, &p, &QuadratureSpec::default()).is_err());
    assert!(k_time(0.5, -1.0, &p, &QuadratureSpec::default()).is_err());
    assert!(matches!(
        verify_laplace_pair(0.5, &[-0.95], &p, &QuadratureSpec::default()),
        Err(PsgeError::Domain(_))
    ));
}

#[test]
fn laplace_pair_holds_off_the_origin() {
    let p = params(1.0, 1.0, 2.0);
    for r in [0.0, 0.5, 2.0] {
        let worst =
            verify_laplace_pair(r, &[0.5, 1.0, 3.0], &p, &QuadratureSpec::default()).unwrap();
        assert!(worst < 1e-6, "r = {r}: {worst}");
    }
}

#[test]
fn mass_follows_closed_form() {
    let p = params(0.1, 1.0, 1.0);
    for t in [0.5, 1.5] {
        let m = kernel_mass(t, &p, &QuadratureSpec::default()).unwrap();
        assert!(rel(m, kernel_mass_exact(t, 1.0)) < 1e-5, "t = {t}: {m}");
        assert!(m <= 1.0 + 1e-10);
    }
    // ∫ e^{-st} (1/a)(1 − e^{−at}) dt = 1/(s(s+a)) = 1/6 at s = 2, a = 1.
    let lap = kernel_mass_laplace(2.0, &p, &QuadratureSpec::default()).unwrap();
    assert!((6.0 * lap - 1.0).abs() < 1e-10);
    assert_eq!(kernel_mass_exact(0.0, 3.0), 0.0);
}

#[test]
fn residual_of_the_equation_decays_at_second_order() {
    let p = params(0.1, 1.0, 1.0);
    for (x, t) in [(1.0, 1.0), (0.3, 0.5)] {
        let r1 = pde_residual(x, t, &p, 1e-2, &tight()).unwrap();
        let r2 = pde_residual(x, t, &p, 5e-3, &tight()).unwrap();
        assert!(r1.is_conditioned() && r2.is_conditioned());
        let ratio = r1.value / r2.value;
        assert!((3.5..=4.5).contains(&ratio), "({x}, {t}): ratio {ratio}");
    }
    assert!(pde_residual(0.0, 1.0, &p, 1e-2, &tight()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kernel_is_even_and_nonnegative_when_dissipative(
        x in 0.0f64..3.0, t in 0.05f64..3.0, eps in 0.05f64..1.0, a in 0.2f64..2.0,
    ) {
        // c = 1 and a ε < 1 keep the medium dissipative.
        prop_assume!(a * eps < 1.0);
        let p = params(eps, a, 1.0);
        let q = QuadratureSpec::default();
        let k = k_time(x, t, &p, &q).unwrap();
        prop_assert!(k >= -1e-10);
        prop_assert_eq!(k, k_time(-x, t, &p, &q).unwrap());
    }

    #[test]
    fn transform_is_real_and_positive_on_the_real_axis(
        x in -5.0f64..5.0, s in 0.01f64..50.0, eps in 0.01f64..2.0, a in 0.1f64..5.0, c in 0.2f64..3.0,
    ) {
        let k = k_hat(x, Complex64::new(s, 0.0), &params(eps, a, c)).unwrap();
        prop_assert!(k.re > 0.0 && k.im == 0.0);
    }

    #[test]
    fn mass_transform_is_bounded_by_1_over_a(t in 0.0f64..50.0, a in 0.1f64..10.0) {
        let m = kernel_mass_exact(t, a);
        prop_assert!(m >= 0.0 && m <= 1.0 / a + 1e-15);
    }
}

#[test]
fn small_r_departure_from_the_origin_is_linear() {
    // The r-linear term of the transform has a non-trivial inverse, so G is
    // not flat at r = 0; both paths must agree on its slope.
    for (eps, a) in [(0.1, 1.0), (1.0, 4.0)] {
        let p = params(eps, a, 1.0);
        for t in [1.0, 5.0] {
            let g0 = g_time_origin(t, &p).unwrap();
            let g = g_time(1e-3, t, &p, &tight()).unwrap();
            let oracle = g_talbot(1e-3, t, eps, a, 1.0);
            assert!(rel(g, oracle) < 1e-8, "{eps} {a} {t}");
            assert!(rel(g, g0) > 1e-5);
        }
    }
}
