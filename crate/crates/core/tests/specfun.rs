#![allow(clippy::excessive_precision)]

use proptest::prelude::*;
use psge_core::specfun::{bessel_i0, bessel_i0_scaled, bessel_j0, i0_sqrt_arg};

// Reference values from 30-digit arbitrary-precision evaluation.
const I0E: [(f64, f64); 8] = [
    (0.0, 1.0),
    (1e-3, 0.999_000_749_583_515_559_4),
    (0.5, 0.645_035_270_449_150_068_1),
    (5.0, 0.183_540_812_609_328_353_1),
    (24.9, 0.080_359_332_611_532_211_31),
    (25.1, 0.080_035_197_254_296_238_74),
    (100.0, 0.039_944_379_299_096_682_65),
    (1e4, 0.003_989_472_674_604_732_106),
];
const J0: [(f64, f64); 10] = [
    (0.0, 1.0),
    (1.0, 0.765_197_686_557_966_551_4),
    (10.0, -0.245_935_764_451_348_335_2),
    (50.0, 0.055_812_327_669_251_815_01),
    (1e3, 0.024_786_686_152_420_174_56),
    (2.99, -0.256_642_741_375_969_871_6),
    (3.01, -0.263_423_861_537_172_521_9),
    (24.99, 0.095_008_236_967_548_321_2),
    (25.01, 0.097_515_201_593_195_513_02),
    (1e5, -0.001_719_201_116_235_972_193),
];

#[test]
fn scaled_i0_matches_reference() {
    for (z, want) in I0E {
        let got = bessel_i0_scaled(z);
        assert!(
            (got - want).abs() <= 2e-15 * want,
            "i0e({z}) = {got}, want {want}"
        );
    }
}

#[test]
fn unscaled_i0_matches_reference() {
    for (z, want) in [
        (0.5, 1.063_483_370_741_323_519),
        (5.0, 27.239_871_823_604_446_9),
        (700.0, 1.529_593_347_671_873_736e302),
    ] {
        let got = bessel_i0(z).unwrap();
        assert!((got - want).abs() <= 1e-13 * want, "I0({z}) = {got}");
    }
    assert!(bessel_i0(800.0).is_err());
}

#[test]
fn j0_matches_reference() {
    for (z, want) in J0 {
        let got = bessel_j0(z);
        assert!((got - want).abs() <= 1e-14, "J0({z}) = {got}, want {want}");
    }
    // First zero.
    assert!(bessel_j0(2.404_825_557_695_773).abs() < 1e-15);
}

#[test]
fn continued_root_is_continuous_at_zero() {
    let (s1, m1) = i0_sqrt_arg(1e-12);
    let (s2, m2) = i0_sqrt_arg(-1e-12);
    assert!(((s1.exp() * m1) - (s2.exp() * m2)).abs() < 1e-12);
    assert_eq!(i0_sqrt_arg(0.0), (0.0, 1.0));
}

proptest! {
    #[test]
    fn scaled_i0_is_even_bounded_and_decreasing(z in 0.0f64..200.0, dz in 1e-6f64..5.0) {
        let a = bessel_i0_scaled(z);
        prop_assert!(a > 0.0 && a <= 1.0);
        prop_assert_eq!(a, bessel_i0_scaled(-z));
        prop_assert!(bessel_i0_scaled(z + dz) <= a * (1.0 + 1e-14));
    }

    #[test]
    fn j0_is_bounded_and_even(z in -500.0f64..500.0) {
        let j = bessel_j0(z);
        prop_assert!(j.abs() <= 1.0 + 1e-15);
        prop_assert_eq!(j, bessel_j0(-z));
    }

    #[test]
    fn i0_satisfies_wronskian_like_ratio(z in 0.1f64..50.0) {
        // I0 is log-convex: I0(z)^2 <= I0(z-h) I0(z+h).
        let h = 0.05;
        let (a, b, c) = (bessel_i0_scaled(z - h), bessel_i0_scaled(z), bessel_i0_scaled(z + h));
        prop_assert!(b * b <= a * c * (1.0 + 1e-13));
    }
}
