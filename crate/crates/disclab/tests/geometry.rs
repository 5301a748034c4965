//! Disc geometry against closed forms, brute-force oracles and invariants.

use std::f64::consts::PI;

use disclab::geometry::*;
use disclab::ode::NamedExample;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn disc_point(max_r: f64) -> impl Strategy<Value = Complex64> {
    (0.0..max_r, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

/// Hille zeros `tanh(kπ/(2γ))` for `|k| ≤ 9`.
fn hille_zeros(gamma: f64) -> Vec<Complex64> {
    (-9..=9).map(|k| c((k as f64 * PI / (2.0 * gamma)).tanh(), 0.0)).collect()
}

/// `1 - |φ_a(z)|²` from the textbook identity `(1-|a|²)(1-|z|²)/|1-āz|²`.
fn defect_oracle(a: Complex64, z: Complex64) -> f64 {
    (1.0 - a.norm_sqr()) * (1.0 - z.norm_sqr()) / (1.0 - a.conj() * z).norm_sqr()
}

#[test]
fn hyperbolic_gaps_of_hille_zeros() {
    // Beyond t ≈ 8 the rounding of 1 - tanh t swamps the 1e-10 budget.
    for gamma in [0.5, 1.0, 2.0] {
        let x: Vec<Complex64> = (0..)
            .map(|k| k as f64 * PI / (2.0 * gamma))
            .take_while(|&t| t <= 8.0)
            .map(|t| c(t.tanh(), 0.0))
            .collect();
        for w in x.windows(2) {
            assert!((hyp_dist(w[0], w[1]) - PI / (2.0 * gamma)).abs() < 1e-10, "gamma={gamma}");
        }
    }
}

#[test]
fn separation_constant_of_hille_zeros() {
    let seq = ZeroSequence::simple(&hille_zeros(1.0)).unwrap();
    let r = separation_constants(&seq);
    assert!((r.separation_constant - (PI / 2.0).tanh()).abs() < 1e-9);
    // Brute-force product over the other points for the uniform constant.
    let pts = seq.expanded();
    let brute = (0..pts.len())
        .map(|k| {
            pts.iter()
                .enumerate()
                .filter(|&(n, _)| n != k)
                .map(|(_, &w)| ((pts[k] - w) / (1.0 - pts[k].conj() * w)).norm())
                .product::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    assert!((r.uniform_separation_constant - brute).abs() < 1e-12);
}

#[test]
fn hille_partitions() {
    let simple = ZeroSequence::simple(&hille_zeros(1.0)).unwrap();
    assert_eq!(greedy_partition(&simple, 0.5).unwrap().partition_count, 1);
    let double = ZeroSequence::new(hille_zeros(1.0).into_iter().map(|z| (z, 2)).collect()).unwrap();
    let rep = greedy_partition(&double, 0.9).unwrap();
    assert_eq!(rep.partition_count, 2);
    for part in &rep.partition {
        let sub = ZeroSequence::simple(part).unwrap();
        assert!(separation_constants(&sub).separation_constant >= 0.9);
    }
}

#[test]
fn separation_sums_match_direct_summation() {
    let zs = hille_zeros(1.0);
    let seq = ZeroSequence::simple(&zs).unwrap();
    let a = c(0.0, 0.0);
    let direct: f64 = zs.iter().filter(|&&z| z != a).map(|&z| (1.0 - z.norm_sqr()).powi(2)).sum();
    assert!((separation_sums(&seq, a, 2) - direct).abs() < 1e-12);
    let a = zs[12];
    let direct: f64 = zs.iter().filter(|&&z| z != a).map(|&z| defect_oracle(a, z)).sum();
    assert!((separation_sums(&seq, a, 1) - direct).abs() < 1e-12);
}

#[test]
fn jensen_for_squared_hille_solution() {
    // f² vanishes to second order at 0; inside r = 0.99 its other zeros are the
    // double zeros ±tanh(π/2).
    let n = 4096;
    let f = NamedExample::Hille { gamma: 1.0 }.reference(n);
    let g = f.mul(&f);
    let x = (PI / 2.0).tanh();
    let zeros = ZeroSequence::new(vec![(c(x, 0.0), 2), (c(-x, 0.0), 2)]).unwrap();
    assert!(jensen_residual(&g, 0.99, &zeros, 1 << 14).unwrap() < 1e-6);
    // Leaving out a zero breaks the balance by 2 log(r/x).
    let partial = ZeroSequence::new(vec![(c(x, 0.0), 2)]).unwrap();
    let r = jensen_residual(&g, 0.99, &partial, 1 << 14).unwrap();
    assert!((r - 2.0 * (0.99 / x).ln()).abs() < 1e-6);
}

/// Points `tanh(j s) e^{iθ}` on `rays` equally spaced rays.
fn geodesic_family(s: f64, count: usize, rays: usize, mult: usize) -> ZeroSequence {
    let mut pts = Vec::new();
    for r in 0..rays {
        let theta = 2.0 * PI * r as f64 / rays as f64;
        for j in 1..=count {
            pts.push((Complex64::from_polar((j as f64 * s).tanh(), theta), mult));
        }
    }
    ZeroSequence::new(pts).unwrap()
}

/// `1 - 2^{-n}` with `2^n` equally spaced angles, `n ≤ levels`.
fn dyadic_family(levels: u32, mult: usize) -> ZeroSequence {
    let mut pts = Vec::new();
    for n in 1..=levels {
        let k = 1usize << n;
        for j in 0..k {
            pts.push((Complex64::from_polar(1.0 - 0.5f64.powi(n as i32), 2.0 * PI * j as f64 / k as f64), mult));
        }
    }
    ZeroSequence::new(pts).unwrap()
}

/// Each point of a geodesic family split into a tight cluster of `size` points.
fn clustered_family(size: usize, mult: usize) -> ZeroSequence {
    let base = geodesic_family(1.0, 8, 3, 1);
    let mut pts = Vec::new();
    for &(z, _) in base.points() {
        for i in 0..size {
            pts.push((z * Complex64::from_polar(1.0, 1e-3 * i as f64 * (1.0 - z.norm())), mult));
        }
    }
    ZeroSequence::new(pts).unwrap()
}

#[test]
fn partitions_respect_the_sum_bound() {
    let families = [
        geodesic_family(1.0, 12, 1, 1),
        geodesic_family(0.5, 12, 4, 2),
        geodesic_family(0.3, 10, 6, 3),
        dyadic_family(6, 1),
        dyadic_family(5, 2),
        clustered_family(2, 1),
        clustered_family(3, 2),
    ];
    for seq in &families {
        let m = max_separation_sum(seq, 2);
        let p = seq.max_multiplicity();
        let rep = greedy_partition(seq, 0.5).unwrap();
        assert!(
            rep.partition_count <= m.floor() as usize + p,
            "{} parts > ⌊{m}⌋ + {p}",
            rep.partition_count
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn pseudo_hyp_is_moebius_invariant(a in disc_point(0.95), b in disc_point(0.95), w in disc_point(0.95)) {
        let lhs = pseudo_hyp(moebius(w, a), moebius(w, b));
        prop_assert!((lhs - pseudo_hyp(a, b)).abs() < 1e-13);
    }

    #[test]
    fn pseudo_hyp_is_symmetric_and_matches_defect(a in disc_point(0.99), b in disc_point(0.99)) {
        prop_assert!((pseudo_hyp(a, b) - pseudo_hyp(b, a)).abs() < 1e-15);
        prop_assert!((moebius_defect(a, b) - defect_oracle(a, b)).abs() < 1e-13);
        prop_assert!((hyp_dist(a, b).tanh() - pseudo_hyp(a, b)).abs() < 1e-12);
    }

    #[test]
    fn moebius_is_an_involution(a in disc_point(0.99), z in disc_point(0.99)) {
        prop_assert!((moebius(a, moebius(a, z)) - z).norm() < 1e-12);
    }

    #[test]
    fn separation_sums_are_rotation_invariant(
        pts in prop::collection::vec(disc_point(0.95), 2..20), theta in 0.0..std::f64::consts::TAU, e in 1u32..=2
    ) {
        let seq = ZeroSequence::simple(&pts).unwrap();
        let rot = seq.rotated(theta);
        let a = pts[0];
        let lhs = separation_sums(&rot, a * Complex64::from_polar(1.0, theta), e);
        prop_assert!((lhs - separation_sums(&seq, a, e)).abs() < 1e-12 * (1.0 + lhs));
    }

    #[test]
    fn greedy_parts_are_separated(pts in prop::collection::vec(disc_point(0.9), 1..30), delta in 0.05..0.95f64) {
        let seq = ZeroSequence::simple(&pts).unwrap();
        let rep = greedy_partition(&seq, delta).unwrap();
        prop_assert_eq!(rep.partition.iter().map(Vec::len).sum::<usize>(), pts.len());
        for part in &rep.partition {
            for (i, &z) in part.iter().enumerate() {
                for &w in &part[i + 1..] {
                    prop_assert!(pseudo_hyp(z, w) >= delta);
                }
            }
        }
    }
}
