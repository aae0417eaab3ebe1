mod common;

use std::f64::consts::PI;

use fracopt::specialfn::*;
use fracopt::FracOrder;
use proptest::prelude::*;
use quadrature::double_exponential;

/// Scaled complement `e^{x²} erfc(x) = 2/√π ∫_0^∞ e^{−s² − 2xs} ds` (x ≥ 0),
/// truncated at s = 12 where the integrand is below 1e-60.
fn erfcx_quad(x: f64) -> f64 {
    let mut acc = 0.0;
    let mut lo = 0.0;
    while lo < 12.0 {
        acc += double_exponential::integrate(|s: f64| (-s * s - 2.0 * x * s).exp(), lo, lo + 0.5, 1e-17).integral;
        lo += 0.5;
    }
    2.0 / PI.sqrt() * acc
}

fn erfc_quad(x: f64) -> f64 {
    (-x * x).exp() * erfcx_quad(x)
}

#[test]
fn gamma_matches_integral_definition() {
    for &x in &[0.05, 0.3, 0.5, 0.9, 1.5, 2.7, 5.2, 11.3] {
        let want = common::gamma_oracle(x);
        let got = gamma_fn(x).unwrap();
        assert!(((got - want) / want).abs() <= 1e-10, "x={x}: {got} vs {want}");
    }
    assert_eq!(gamma_fn(1.0).unwrap(), 1.0);
    assert_eq!(gamma_fn(5.0).unwrap(), 24.0);
    assert!(gamma_fn(0.0).is_err());
    assert!(gamma_fn(-1.5).is_err());
    assert!(ln_gamma(f64::NAN).is_err());
}

#[test]
fn fractional_laplacian_constant_matches_oracle() {
    for s in [0.1, 0.3, 0.5, 0.75, 0.95] {
        let got = cns_constant(1, FracOrder::new(s).unwrap()).unwrap();
        let want = common::c1s(s);
        assert!(((got - want) / want).abs() <= 1e-10, "s={s}");
    }
    // C_{1,1/2} = 1/π
    let half = cns_constant(1, FracOrder::new(0.5).unwrap()).unwrap();
    assert!((half - 1.0 / PI).abs() <= 1e-14);
    // C_{2,s} = s 4^s Γ(1+s) / (π Γ(1−s))
    let s = 0.4;
    let c2 = cns_constant(2, FracOrder::new(s).unwrap()).unwrap();
    let want = s * 4f64.powf(s) * common::gamma_oracle(1.0 + s) / (PI * common::gamma_oracle(1.0 - s));
    assert!(((c2 - want) / want).abs() <= 1e-10);
    assert!(cns_constant(3, FracOrder::new(s).unwrap()).is_err());
}

#[test]
fn half_order_mittag_leffler_matches_erfc_quadrature() {
    // E_{1/2}(−x) = e^{x²} erfc(x)
    for k in 0..=40 {
        let x = 0.125 * k as f64;
        let want = erfcx_quad(x);
        let got = mittag_leffler(0.5, -x).unwrap();
        assert!(((got - want) / want).abs() <= 1e-9, "x={x}: {got} vs {want}");
    }
}

#[test]
fn erfc_oracle_agrees_with_quadrature() {
    for &x in &[0.0, 0.2, 1.0, 1.99, 2.01, 3.5, 6.0] {
        let want = erfc_quad(x);
        assert!(((erfc_oracle(x) - want) / want).abs() <= 1e-11, "x={x}");
    }
    assert!((erfc_oracle(-1.0) - (2.0 - erfc_quad(1.0))).abs() <= 1e-13);
}

#[test]
fn mittag_leffler_domain() {
    assert!(mittag_leffler(0.0, -1.0).is_err());
    assert!(mittag_leffler(1.2, -1.0).is_err());
    assert_eq!(mittag_leffler(0.7, 0.0).unwrap(), 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gamma_reflection(x in 0.01f64..0.99) {
        let lhs = gamma_fn(x).unwrap() * gamma_fn(1.0 - x).unwrap();
        let rhs = PI / (PI * x).sin();
        prop_assert!(((lhs - rhs) / rhs).abs() <= 1e-12);
    }

    #[test]
    fn gamma_recurrence(x in 0.05f64..40.0) {
        let lhs = gamma_fn(x + 1.0).unwrap();
        let rhs = x * gamma_fn(x).unwrap();
        prop_assert!(((lhs - rhs) / rhs).abs() <= 1e-12);
        prop_assert!((ln_gamma(x).unwrap() - gamma_fn(x).unwrap().ln()).abs() <= 1e-11 * (1.0 + ln_gamma(x).unwrap().abs()));
    }

    #[test]
    fn mittag_leffler_relaxation_is_monotone_and_bounded(alpha in 0.1f64..1.0, x in 0.0f64..30.0, dx in 0.01f64..1.0) {
        let a = mittag_leffler(alpha, -x).unwrap();
        let b = mittag_leffler(alpha, -x - dx).unwrap();
        prop_assert!(a > 0.0 && a <= 1.0);
        prop_assert!(b < a);
    }

    #[test]
    fn mittag_leffler_series_and_integral_agree_near_switch(alpha in 0.2f64..0.95, x in 0.5f64..2.0) {
        let s = ml_series(alpha, -x).unwrap();
        let i = ml_integral(alpha, x).unwrap();
        prop_assert!((s - i).abs() <= 1e-9, "{} vs {}", s, i);
    }

    #[test]
    fn pow_diff_matches_direct_difference(p in -0.9f64..1.9, lo in 0.5f64..100.0, gap in 0.5f64..10.0) {
        let hi = lo + gap;
        let want = hi.powf(p) - lo.powf(p);
        prop_assert!((pow_diff(p, lo, hi) - want).abs() <= 1e-12 * (1.0 + hi.powf(p).abs()));
    }
}
