//! Disc automorphisms, hyperbolic distances, Carleson squares and
//! separation analysis of point sequences.

use std::cmp::Ordering;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::PowerSeries;

/// `φ_a(z) = (a - z)/(1 - āz)`, an involutive automorphism of the disc.
pub fn moebius(a: Complex64, z: Complex64) -> Complex64 {
    (a - z) / (1.0 - a.conj() * z)
}

/// `φ_a'(z) = -(1 - |a|²)/(1 - āz)²`.
pub fn moebius_deriv(a: Complex64, z: Complex64) -> Complex64 {
    let d = 1.0 - a.conj() * z;
    -(1.0 - a.norm_sqr()) / (d * d)
}

/// `1 - |φ_a(z)|²`, computed without cancellation.
pub fn moebius_defect(a: Complex64, z: Complex64) -> f64 {
    (1.0 - a.norm_sqr()) * (1.0 - z.norm_sqr()) / (1.0 - a.conj() * z).norm_sqr()
}

/// Pseudo-hyperbolic distance `|φ_a(b)|`.
pub fn pseudo_hyp(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / (1.0 - a.conj() * b).norm()
}

/// Hyperbolic distance `artanh |φ_a(b)|`.
pub fn hyp_dist(a: Complex64, b: Complex64) -> f64 {
    pseudo_hyp(a, b).atanh()
}

/// Membership in the Carleson square `S_a`; `S_0` is the whole disc.
pub fn in_carleson_square(z: Complex64, a: Complex64) -> bool {
    let ra = a.norm();
    if ra == 0.0 {
        return z.norm() < 1.0;
    }
    let rz = z.norm();
    if !(ra < rz && rz < 1.0) {
        return false;
    }
    angle_gap(z.arg(), a.arg()) <= (1.0 - ra) / 2.0
}

/// `|s - t|` reduced to `[0, π]`.
pub fn angle_gap(s: f64, t: f64) -> f64 {
    let d = (s - t).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Finite point sequence with multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSequence {
    points: Vec<(Complex64, usize)>,
}

impl ZeroSequence {
    pub fn new(points: Vec<(Complex64, usize)>) -> Result<Self> {
        for &(z, m) in &points {
            if !(z.norm() < 1.0) {
                return Err(Error::OutsideDisc { modulus: z.norm() });
            }
            if m == 0 {
                return Err(Error::InvalidArgument("multiplicity must be positive".into()));
            }
        }
        Ok(ZeroSequence { points })
    }

    /// Simple points.
    pub fn simple(points: &[Complex64]) -> Result<Self> {
        Self::new(points.iter().map(|&z| (z, 1)).collect())
    }

    pub fn points(&self) -> &[(Complex64, usize)] {
        &self.points
    }

    pub fn max_multiplicity(&self) -> usize {
        self.points.iter().map(|p| p.1).max().unwrap_or(0)
    }

    /// Locations repeated according to multiplicity.
    pub fn expanded(&self) -> Vec<Complex64> {
        self.points
            .iter()
            .flat_map(|&(z, m)| std::iter::repeat_n(z, m))
            .collect()
    }

    /// The sequence rotated by `e^{iθ}`.
    pub fn rotated(&self, theta: f64) -> Self {
        let w = Complex64::from_polar(1.0, theta);
        ZeroSequence { points: self.points.iter().map(|&(z, m)| (z * w, m)).collect() }
    }
}

/// Separation functionals and, optionally, a partition into separated parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    /// `inf_{j≠k} |φ_{z_j}(z_k)|`.
    pub separation_constant: f64,
    /// `inf_k Π_{n≠k} |φ_{z_k}(z_n)|`.
    pub uniform_separation_constant: f64,
    pub partition: Vec<Vec<Complex64>>,
    pub partition_count: usize,
}

/// Both separation constants. Sequences with fewer than two points get 1.
pub fn separation_constants(seq: &ZeroSequence) -> SeparationReport {
    let pts = seq.expanded();
    let (sep, usep) = if pts.len() < 2 {
        (1.0, 1.0)
    } else {
        let rows: Vec<(f64, f64)> = (0..pts.len())
            .into_par_iter()
            .map(|k| {
                let mut min = f64::INFINITY;
                let mut prod = 1.0;
                for (n, &w) in pts.iter().enumerate() {
                    if n != k {
                        let d = pseudo_hyp(pts[k], w);
                        min = min.min(d);
                        prod *= d;
                    }
                }
                (min, prod)
            })
            .collect();
        rows.iter().fold((f64::INFINITY, f64::INFINITY), |(s, u), &(m, p)| (s.min(m), u.min(p)))
    };
    SeparationReport {
        separation_constant: sep,
        uniform_separation_constant: usep,
        partition: Vec::new(),
        partition_count: 0,
    }
}

/// Greedy split into `δ`-separated sub-sequences.
///
/// Points are visited by increasing modulus, then argument, and appended to
/// the first sub-sequence whose members all lie at pseudo-hyperbolic
/// distance at least `δ`. Coincident points never share a sub-sequence.
pub fn greedy_partition(seq: &ZeroSequence, delta: f64) -> Result<SeparationReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta {delta} not in (0,1)")));
    }
    let mut pts = seq.expanded();
    pts.sort_by(|a, b| {
        a.norm()
            .partial_cmp(&b.norm())
            .unwrap_or(Ordering::Equal)
            .then(a.arg().partial_cmp(&b.arg()).unwrap_or(Ordering::Equal))
    });
    let mut parts: Vec<Vec<Complex64>> = Vec::new();
    for z in pts {
        match parts
            .iter_mut()
            .find(|part| part.iter().all(|&w| pseudo_hyp(z, w) >= delta))
        {
            Some(part) => part.push(z),
            None => parts.push(vec![z]),
        }
    }
    let mut report = separation_constants(seq);
    report.partition_count = parts.len();
    report.partition = parts;
    Ok(report)
}

/// `Σ_{z_k ≠ a} (1 - |φ_a(z_k)|²)^e` over the sequence with multiplicity.
/// Copies of `a` itself are skipped.
pub fn separation_sums(seq: &ZeroSequence, a: Complex64, exponent: u32) -> f64 {
    seq.points
        .iter()
        .filter(|(z, _)| *z != a)
        .map(|&(z, m)| m as f64 * moebius_defect(a, z).powi(exponent as i32))
        .sum()
}

/// `sup_{a ∈ Z} Σ_{z_k ≠ a} (1 - |φ_a(z_k)|²)^e`.
pub fn max_separation_sum(seq: &ZeroSequence, exponent: u32) -> f64 {
    seq.points
        .par_iter()
        .map(|&(a, _)| separation_sums(seq, a, exponent))
        .reduce(|| 0.0, f64::max)
}

/// Discrepancy in Jensen's formula for `h = g/z²` on the circle `|z| = r`.
///
/// With `h(0) = g''(0)/2`, returns
/// `|Σ log(r/|z_k|) - ((1/2π)∫ log|g(re^{iθ})| dθ - 2 log r - log|g''(0)/2|)|`,
/// the angular integral being the `m`-point trapezoid rule. `zeros` lists
/// the zeros of `g` in `0 < |z| < r`.
pub fn jensen_residual(g: &PowerSeries, r: f64, zeros: &ZeroSequence, m: usize) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidArgument(format!("radius {r} not in (0,1)")));
    }
    let c2 = g.coeff(2);
    if g.coeff(0).norm() > 0.0 || g.coeff(1).norm() > 0.0 || c2.norm() == 0.0 {
        return Err(Error::InvalidArgument("g must vanish exactly to order 2 at the origin".into()));
    }
    if zeros.points().iter().any(|(z, _)| (z.norm() - r).abs() < 1e-12) {
        return Err(Error::ZeroOnCircle { radius: r });
    }
    let samples = g.sample_circle(r, m);
    if samples.iter().any(|v| v.norm() == 0.0) {
        return Err(Error::ZeroOnCircle { radius: r });
    }
    let mean_log = samples.iter().map(|v| v.norm().ln()).sum::<f64>() / m as f64;
    let lhs: f64 = zeros
        .points()
        .iter()
        .filter(|(z, _)| z.norm() < r)
        .map(|&(z, k)| k as f64 * (r / z.norm()).ln())
        .sum();
    let rhs = mean_log - 2.0 * r.ln() - c2.norm().ln();
    Ok((lhs - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn moebius_basics() {
        let z = c(0.3, -0.5);
        let a = c(-0.2, 0.6);
        assert_eq!(moebius(c(0.0, 0.0), z), -z);
        assert_eq!(moebius(a, a), c(0.0, 0.0));
        assert!((moebius(a, moebius(a, z)) - z).norm() < 1e-14);
        let h = 1e-6;
        let fd = (moebius(a, z + h) - moebius(a, z - h)) / (2.0 * h);
        assert!((fd - moebius_deriv(a, z)).norm() < 1e-8);
    }

    #[test]
    fn distances() {
        let a = c(0.4, 0.3);
        assert!((pseudo_hyp(c(0.0, 0.0), a) - 0.5).abs() < 1e-15);
        let (s, t) = (0.4_f64, 1.3_f64);
        assert!((pseudo_hyp(c(s.tanh(), 0.0), c(t.tanh(), 0.0)) - (t - s).tanh()).abs() < 1e-14);
        let x = |k: f64| c((k * PI / 2.0).tanh(), 0.0);
        assert!((hyp_dist(x(1.0), x(2.0)) - PI / 2.0).abs() < 1e-10);
    }

    #[test]
    fn carleson_squares() {
        assert!(in_carleson_square(c(-0.3, 0.8), c(0.0, 0.0)));
        assert!(in_carleson_square(c(0.9, 0.0), c(0.5, 0.0)));
        assert!(!in_carleson_square(Complex64::from_polar(0.9, 1.0), c(0.5, 0.0)));
        assert!(in_carleson_square(Complex64::from_polar(0.9, PI - 0.01), Complex64::from_polar(0.6, -PI + 0.01)));
    }

    #[test]
    fn separation_of_small_sets() {
        let one = ZeroSequence::simple(&[c(0.2, 0.1)]).unwrap();
        let r = separation_constants(&one);
        assert_eq!((r.separation_constant, r.uniform_separation_constant), (1.0, 1.0));
        let empty = ZeroSequence::new(vec![]).unwrap();
        assert_eq!(separation_constants(&empty).separation_constant, 1.0);
        let a = c(0.3, 0.4);
        let pair = ZeroSequence::simple(&[c(0.0, 0.0), a]).unwrap();
        let r = separation_constants(&pair);
        assert!((r.separation_constant - 0.5).abs() < 1e-15);
        assert!((r.uniform_separation_constant - 0.5).abs() < 1e-15);
        let double = ZeroSequence::new(vec![(a, 2)]).unwrap();
        assert_eq!(separation_constants(&double).separation_constant, 0.0);
    }

    #[test]
    fn partitions_of_multiple_points() {
        let seq = ZeroSequence::new(vec![(c(0.1, 0.2), 3)]).unwrap();
        assert_eq!(greedy_partition(&seq, 0.5).unwrap().partition_count, 3);
        assert!(greedy_partition(&seq, 1.0).is_err());
    }

    #[test]
    fn separation_sum_cases() {
        let s = ZeroSequence::simple(&[c(0.5, 0.0)]).unwrap();
        assert_eq!(separation_sums(&s, c(0.5, 0.0), 2), 0.0);
        let r = 0.7;
        let s = ZeroSequence::simple(&[c(0.0, 0.0), c(r, 0.0)]).unwrap();
        assert!((separation_sums(&s, c(0.0, 0.0), 2) - (1.0 - r * r).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn jensen_for_monomial_and_one_zero() {
        let z2 = PowerSeries::monomial(2, 2);
        let none = ZeroSequence::new(vec![]).unwrap();
        assert!(jensen_residual(&z2, 0.7, &none, 64).unwrap() < 1e-14);
        let b = c(0.3, 0.4);
        let g = PowerSeries::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), -1.0 / b]);
        let zs = ZeroSequence::simple(&[b]).unwrap();
        assert!(jensen_residual(&g, 0.8, &zs, 4096).unwrap() < 1e-8);
        assert!(jensen_residual(&g, 0.5, &zs, 4096).is_err());
    }
}
