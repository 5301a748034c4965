//! Power-series arithmetic against independent oracles and invariants.

use disclab::geometry::moebius;
use disclab::PowerSeries;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Direct power sum `Σ c_n z^n`, not Horner.
fn power_sum(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().enumerate().map(|(n, a)| a * z.powu(n as u32)).sum()
}

fn coeffs_strategy(max_len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..=max_len)
        .prop_map(|v| v.into_iter().map(|(a, b)| c(a, b)).collect())
}

fn disc_point(max_r: f64) -> impl Strategy<Value = Complex64> {
    (0.0..max_r, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

#[test]
fn exp_times_reciprocal_is_one() {
    // Coefficients from the closed form s^n/n! via lgamma-free products.
    let exp = |s: f64| {
        PowerSeries::from_fn(30, |n| c(s.powi(n as i32) / (1..=n).map(|k| k as f64).product::<f64>(), 0.0))
    };
    let one = exp(1.0).mul(&exp(-1.0));
    assert!((one.coeff(0) - c(1.0, 0.0)).norm() < 1e-14);
    assert!(one.coeffs()[1..].iter().all(|x| x.norm() < 1e-14));
    // The exponential of the series z agrees with the same oracle.
    let e = PowerSeries::monomial(1, 30).exp();
    for (a, b) in e.coeffs().iter().zip(exp(1.0).coeffs()) {
        assert!((a - b).norm() < 1e-15);
    }
}

#[test]
fn geometric_partial_sum_closed_form() {
    let f = PowerSeries::geometric(c(1.0, 0.0), 50);
    let v = f.eval(c(0.5, 0.0)).unwrap();
    assert!((v.re - (2.0 - 2f64.powi(-50))).abs() < 1e-15);
    assert!(f.eval(c(1.0, 0.0)).is_err());
}

#[test]
fn composition_of_identity_matches_geometric_expansion() {
    for a in [c(0.5, 0.0), c(-0.2, 0.6), c(0.0, -0.7)] {
        let n = 48;
        let g = PowerSeries::monomial(1, n).compose_moebius(a, 2 * n + 2).unwrap();
        // The tail ā^{n-1} is resolved for |a| ≤ 0.65 only.
        assert_eq!(g.accuracy_loss, a.norm() > 0.65);
        // (a - z)/(1 - āz) = a - (1-|a|²) Σ ā^{n-1} z^n
        let s = 1.0 - a.norm_sqr();
        assert!((g.series.coeff(0) - a).norm() < 1e-12);
        for k in 1..=n {
            assert!((g.series.coeff(k) + s * a.conj().powu(k as u32 - 1)).norm() < 1e-12, "a={a} k={k}");
        }
    }
}

#[test]
fn composition_agrees_with_pointwise_evaluation() {
    let f = PowerSeries::from_fn(20, |n| c(1.0 / (n + 1) as f64, 0.3 / (n + 2) as f64)).with_order(96);
    let a = c(0.35, -0.25);
    let g = f.compose_moebius(a, 2 * 96 + 2).unwrap().series;
    for z in [c(0.1, 0.2), c(-0.4, 0.0), c(0.0, 0.5)] {
        let direct = power_sum(f.coeffs(), moebius(a, z));
        assert!((g.eval(z).unwrap() - direct).norm() < 1e-10, "z={z}");
    }
}

#[test]
fn composition_flags_unresolved_tails() {
    // 1/(1 - 0.999 z) composed at a = -0.9 is far from polynomial at order 16.
    let f = PowerSeries::geometric(c(0.999, 0.0), 16);
    let g = f.compose_moebius(c(-0.9, 0.0), 34).unwrap();
    assert!(g.accuracy_loss);
    assert!(g.relative_tail > disclab::series::COMPOSE_TAIL_TOL);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eval_is_linear(f in coeffs_strategy(12), g in coeffs_strategy(12), z in disc_point(0.95)) {
        let (f, g) = (PowerSeries::new(f), PowerSeries::new(g));
        let lhs = f.add(&g).eval(z).unwrap();
        let n = f.order().min(g.order());
        let rhs = f.truncate(n).eval(z).unwrap() + g.truncate(n).eval(z).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-13);
    }

    #[test]
    fn horner_matches_power_sum(f in coeffs_strategy(24), z in disc_point(0.99)) {
        let s = PowerSeries::new(f.clone());
        prop_assert!((s.eval(z).unwrap() - power_sum(&f, z)).norm() < 1e-12);
    }

    #[test]
    fn discrete_parseval(f in coeffs_strategy(16), r in 0.1..0.99f64, extra in 0usize..8) {
        let s = PowerSeries::new(f.clone());
        let m = 2 * s.order() + 1 + extra;
        let mean: f64 = s.sample_circle(r, m).iter().map(|v| v.norm_sqr()).sum::<f64>() / m as f64;
        let exact: f64 = f.iter().enumerate().map(|(k, a)| a.norm_sqr() * r.powi(2 * k as i32)).sum();
        prop_assert!((mean - exact).abs() < 1e-13 * (1.0 + exact));
    }

    #[test]
    fn antiderivative_inverts_derivative(f in coeffs_strategy(20)) {
        let s = PowerSeries::new(f);
        let back = s.derivative().antiderivative(s.coeff(0));
        for k in 0..s.order() {
            prop_assert!((back.coeff(k) - s.coeff(k)).norm() < 1e-14);
        }
    }

    #[test]
    fn product_is_bilinear_and_commutative(
        f in coeffs_strategy(10), g in coeffs_strategy(10), h in coeffs_strategy(10), t in -2.0..2.0f64
    ) {
        let (f, g, h) = (PowerSeries::new(f), PowerSeries::new(g), PowerSeries::new(h));
        let lhs = f.mul(&g.add(&h.scale(c(t, 0.0))));
        let rhs = f.mul(&g).add(&f.mul(&h).scale(c(t, 0.0)));
        let n = lhs.order().min(rhs.order());
        for k in 0..=n {
            prop_assert!((lhs.coeff(k) - rhs.coeff(k)).norm() < 1e-13);
        }
        prop_assert_eq!(f.mul(&g).order(), g.mul(&f).order());
        for k in 0..=f.mul(&g).order() {
            prop_assert!((f.mul(&g).coeff(k) - g.mul(&f).coeff(k)).norm() < 1e-14);
        }
    }

    #[test]
    fn double_composition_is_identity(f in coeffs_strategy(31), a in disc_point(0.7)) {
        // Degree ≤ 30 carried at order 400 so the first composition's tail is resolved.
        let n = 400;
        let s = PowerSeries::new(f).with_order(n);
        let once = s.compose_moebius(a, 2 * n + 2).unwrap().series;
        let twice = once.compose_moebius(a, 2 * n + 2).unwrap().series;
        for k in 0..=30 {
            prop_assert!((twice.coeff(k) - s.coeff(k)).norm() < 1e-10, "k={} diff={}", k, (twice.coeff(k) - s.coeff(k)).norm());
        }
    }
}
