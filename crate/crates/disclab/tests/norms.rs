//! Norm estimators against closed-form integrals, brute-force sums and the
//! ordering relations between spaces.

use std::f64::consts::PI;

use disclab::corpus::SeriesSpec;
use disclab::norms::*;
use disclab::ode::NamedExample;
use disclab::PowerSeries;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn full_disc_grid() -> QuadratureGrid {
    QuadratureGrid::for_order(16).with_r_max(1.0 - 2f64.powi(-44)).unwrap()
}

#[test]
fn area_integrals_of_radial_densities() {
    let g = full_disc_grid();
    let tab = |h: fn(Complex64) -> f64| area_integral(&g.tabulate(h), &g);
    assert!((tab(|_| 1.0) - 1.0).abs() < 1e-12);
    assert!((tab(|z| (1.0 - z.norm_sqr()).powi(3)) - 0.25).abs() < 1e-10);
    // r log r is not smooth at 0, so Gauss-Legendre converges only algebraically there.
    let fine = QuadratureGrid::new(32, 64, g.r_max()).unwrap();
    let log = area_integral(&fine.tabulate(|z| -z.norm().ln()), &fine);
    assert!((log - 0.5).abs() < 1e-6);
    // ∫ r⁶ cos²θ r dr dθ/π = 1/8.
    assert!((tab(|z| z.re * z.re * z.norm_sqr().powi(2)) - 0.125).abs() < 1e-12);
}

#[test]
fn hardy_norms_of_model_functions() {
    let g = QuadratureGrid::for_order(256).with_angular_count(1 << 14).unwrap();
    let z7 = PowerSeries::monomial(7, 256);
    assert!((hp_norm(&z7, 1.5, &g).unwrap().value - 0.999f64.powi(7)).abs() < 1e-12);

    // 1/(1-z) is in H^{1/2}: stable value, no divergence flag.
    let geo = PowerSeries::geometric(c(1.0, 0.0), 256);
    let est = hp_norm(&geo, 0.5, &g).unwrap();
    assert!(!est.divergence_flag);
    assert!(est.refinement_change() < 1e-2);
    // At r = 0.9 the truncation is invisible; compare with the closed form.
    let g9 = g.with_r_max(0.9).unwrap();
    let m = 1 << 16;
    let exact = ((0..m)
        .map(|j| (1.0 / (c(1.0, 0.0) - Complex64::from_polar(0.9, 2.0 * PI * j as f64 / m as f64))).norm().sqrt())
        .sum::<f64>()
        / m as f64)
        .powi(2);
    assert!((hp_norm(&geo, 0.5, &g9).unwrap().value - exact).abs() < 1e-10 * exact);

    // |exp(-(1+z)/(1-z))| ≤ 1 on the disc.
    let n = 1024;
    let f = NamedExample::ExpSingular.reference(n);
    let est = hp_norm(&f, 2.0, &QuadratureGrid::for_order(n)).unwrap();
    assert!(est.value <= 1.0 + 1e-9, "{}", est.value);
}

#[test]
fn growth_norm_of_named_coefficients() {
    let hille = NamedExample::Hille { gamma: 1.0 }.coefficient(256);
    let est = growth_norm(&hille, 2.0, &QuadratureGrid::for_order(256));
    assert!((est.value - 5.0).abs() < 0.05);
    assert!(!est.divergence_flag);
    let n = 4096;
    let sing = NamedExample::ExpSingular.coefficient(n);
    let g = QuadratureGrid::for_order(n).with_angular_count(1024).unwrap();
    assert!(growth_norm(&sing, 2.0, &g).divergence_flag);
}

#[test]
fn bloch_norm_of_logarithmic_kernel() {
    let n = 512;
    let zeta: f64 = 0.999;
    let f = PowerSeries::from_fn(n, |k| if k == 0 { c(1.0, 0.0) } else { c(zeta.powi(k as i32) / k as f64, 0.0) });
    let est = bloch_norm(&f, &QuadratureGrid::for_order(n));
    assert!((1.8..=2.0).contains(&est.value), "{}", est.value);
    assert!(!est.divergence_flag);
    // Brute-force maximum of (1-x²)ζ/(1-ζx) along the radius through ζ.
    let brute = (0..100_000)
        .map(|i| {
            let x = i as f64 / 100_000.0;
            (1.0 - x * x) * zeta / (1.0 - zeta * x)
        })
        .fold(0.0, f64::max);
    assert!((est.value - brute).abs() < 1e-3 * brute);
}

#[test]
fn decay_profile_of_polynomial() {
    let prof = decay_profile(&PowerSeries::monomial(2, 2), &[0.5, 0.9, 0.99], 64);
    assert!(prof.last().unwrap().1 < 0.05);
    for (r, v) in prof {
        assert!((v - 2.0 * r * (1.0 - r * r)).abs() < 1e-14);
    }
}

#[test]
fn bmoa_forms_for_the_identity() {
    let g = QuadratureGrid::for_order(32);
    let id = PowerSeries::monomial(1, 32);
    assert!((bmoa_garsia(&id, &g).value - 0.5).abs() < 1e-3);
    let g = g.with_r_max(1.0 - 1e-7).unwrap();
    assert!((bmoa_h2_def(&id, &g).unwrap().value - 1.0).abs() < 1e-6);
    assert_eq!(bmoa_garsia(&PowerSeries::constant(c(2.0, 1.0), 8), &g).value, 0.0);
}

#[test]
fn logarithm_is_in_bmoa() {
    let n = 512;
    let f = PowerSeries::from_fn(n, |k| if k == 0 { c(1.0, 0.0) } else { c(1.0 / k as f64, 0.0) });
    let est = bmoa_garsia(&f, &QuadratureGrid::for_order(n));
    assert!(est.value.is_finite() && !est.divergence_flag);
}

#[test]
fn bmoa_forms_are_comparable_on_a_corpus() {
    let specs = [
        "poly:0,1",
        "poly:0.5,0.5",
        "poly:0,0,0,1",
        "poly:0.2,1,-0.3,0.1",
        "exp:eps=0.5",
        "exp:eps=1.0",
        "geometric:w=0.3",
        "geometric:w=0.6",
        "binomial:a=0.5,s=0.25",
        "lacunary:base=2,decay=0.5",
    ];
    let g = QuadratureGrid::for_order(64);
    for s in specs {
        let f = s.parse::<SeriesSpec>().unwrap().series(64);
        let a = bmoa_garsia(&f, &g).value;
        let b = bmoa_h2_def(&f, &g).unwrap().value;
        assert!(a <= 4.0 * b && b <= 4.0 * a, "{s}: garsia {a}, h2 {b}");
    }
}

#[test]
fn carleson_masses_of_simple_densities() {
    let g = QuadratureGrid::for_order(64);
    let one = carleson_norm(|_| 1.0, &g);
    assert!(one.value >= 0.99);
    // Constant density: S_a ∩ {|z| ≤ r_max} is a polar rectangle of normalized
    // area (r_max² - |a|²)(1 - |a|)/(2π).
    let masses = g.carleson_masses(&g.tabulate(|_| 1.0));
    for (m, a) in masses.iter().zip(g.a_grid()) {
        let ra = a.norm();
        let exact = if ra == 0.0 { g.r_max().powi(2) } else { (g.r_max().powi(2) - ra * ra) * (1.0 - ra) / (2.0 * PI) };
        assert!((m - exact).abs() <= 1e-3 * exact + 1e-15, "a={a}: {m} vs {exact}");
    }

    // A narrow Gaussian well inside S_{0.9}: its mass is s in normalized measure.
    let s = 1e-5;
    let bump = move |z: Complex64| (-(z - c(0.95, 0.0)).norm_sqr() / s).exp();
    let g = QuadratureGrid::new(32, 4096, 0.999).unwrap();
    let masses = g.carleson_masses(&g.tabulate(bump));
    let at = g.a_grid().iter().position(|&a| (a - c(0.9, 0.0)).norm() < 1e-12).unwrap();
    assert!((masses[at] - s).abs() < 1e-3 * s, "{}", masses[at]);
    assert!(carleson_norm(bump, &g).value >= s / 0.1 * (1.0 - 1e-3));
}

fn coeffs() -> impl Strategy<Value = PowerSeries> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..=12)
        .prop_map(|v| PowerSeries::new(v.into_iter().map(|(a, b)| c(a, b)).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn h2_norm_obeys_parseval(f in coeffs()) {
        let g = QuadratureGrid::for_order(f.order());
        let exact: f64 = f.coeffs().iter().enumerate().map(|(k, a)| a.norm_sqr() * g.r_max().powi(2 * k as i32)).sum();
        prop_assert!((hp_norm(&f, 2.0, &g).unwrap().value.powi(2) - exact).abs() < 1e-12 * (1.0 + exact));
    }

    #[test]
    fn area_integral_is_linear_and_monotone(s in 0.0..3.0f64, t in 0.0..3.0f64) {
        let g = QuadratureGrid::for_order(8);
        let u = g.tabulate(|z| z.norm_sqr());
        let v = g.tabulate(|z| (1.0 - z.norm()).powi(2));
        let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| s * a + t * b).collect();
        let lhs = area_integral(&w, &g);
        prop_assert!((lhs - s * area_integral(&u, &g) - t * area_integral(&v, &g)).abs() < 1e-13);
        let bigger: Vec<f64> = w.iter().zip(&u).map(|(a, b)| a + b).collect();
        prop_assert!(area_integral(&bigger, &g) >= lhs);
    }

    #[test]
    fn sup_norm_dominates_hardy_means(f in coeffs(), p in 0.25..6.0f64) {
        let g = QuadratureGrid::for_order(f.order());
        let mean = mp_mean(&f, g.r_max(), p, g.angular_count());
        prop_assert!(growth_norm(&f, 0.0, &g).value >= mean * (1.0 - 1e-12));
    }
}
