//! Coefficient conditions as grid estimators.
//!
//! Every quantity is reported raw, with its half-resolution value and the
//! divergence diagnostic. No smallness threshold is applied anywhere.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::{estimate, gauss_legendre, NormEstimate, QuadratureGrid};
use crate::series::PowerSeries;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Condition tags, stable on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionKind {
    Nehari,
    Growth3,
    Area3,
    Lalpha,
    Lmoa,
    LmoaSquare,
    BmoaDd,
    BmoaH1,
    CauchyBound,
    Decay,
    BlochKernel,
}

impl ConditionKind {
    pub const ALL: [ConditionKind; 11] = [
        ConditionKind::Nehari,
        ConditionKind::Growth3,
        ConditionKind::Area3,
        ConditionKind::Lalpha,
        ConditionKind::Lmoa,
        ConditionKind::LmoaSquare,
        ConditionKind::BmoaDd,
        ConditionKind::BmoaH1,
        ConditionKind::CauchyBound,
        ConditionKind::Decay,
        ConditionKind::BlochKernel,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ConditionKind::Nehari => "nehari",
            ConditionKind::Growth3 => "growth3",
            ConditionKind::Area3 => "area3",
            ConditionKind::Lalpha => "lalpha",
            ConditionKind::Lmoa => "lmoa",
            ConditionKind::LmoaSquare => "lmoa-square",
            ConditionKind::BmoaDd => "bmoa-dd",
            ConditionKind::BmoaH1 => "bmoa-h1",
            ConditionKind::CauchyBound => "cauchy-bound",
            ConditionKind::Decay => "decay",
            ConditionKind::BlochKernel => "bloch-kernel",
        }
    }
}

impl fmt::Display for ConditionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for ConditionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ConditionKind::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| Error::Config(format!("unknown condition tag {s:?}")))
    }
}

/// Resolution of the grid a report was computed on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridFingerprint {
    pub nodes_per_panel: usize,
    pub radial_count: usize,
    pub angular_count: usize,
    pub r_max: f64,
    pub center_count: usize,
}

impl From<&QuadratureGrid> for GridFingerprint {
    fn from(g: &QuadratureGrid) -> Self {
        GridFingerprint {
            nodes_per_panel: g.nodes_per_panel(),
            radial_count: g.radial_nodes().len(),
            angular_count: g.angular_count(),
            r_max: g.r_max(),
            center_count: g.a_grid().len(),
        }
    }
}

/// A condition quantity with its refinement diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub kind: ConditionKind,
    /// Which coefficient or parameter the value refers to, e.g. `A0` or `alpha=2`.
    pub label: String,
    pub value: f64,
    pub value_coarse: f64,
    pub divergence_flag: bool,
    pub grid: GridFingerprint,
}

impl ConditionReport {
    pub(crate) fn new(kind: ConditionKind, label: impl Into<String>, est: NormEstimate, grid: &QuadratureGrid) -> Self {
        ConditionReport {
            kind,
            label: label.into(),
            value: est.value,
            value_coarse: est.value_coarse,
            divergence_flag: est.divergence_flag,
            grid: grid.into(),
        }
    }
}

/// Angular chunks in [`h1_means`].
const H1_CHUNKS: usize = 32;

/// `log(e/(1-r))`.
pub fn log_weight(r: f64) -> f64 {
    1.0 - (1.0 - r).ln()
}

fn sup_over_grid(g: &QuadratureGrid, vals: &[Complex64], origin: f64, w: impl Fn(f64, f64) -> f64) -> f64 {
    let m = g.angular_count();
    g.radial_nodes()
        .iter()
        .enumerate()
        .map(|(i, &(r, _))| {
            let peak = vals[i * m..(i + 1) * m].iter().map(|v| v.norm()).fold(0.0, f64::max);
            w(peak, r)
        })
        .fold(w(origin, 0.0), f64::max)
}

/// `sup |A(z)| (1-|z|²)²`.
pub fn nehari_sup(a: &PowerSeries, grid: &QuadratureGrid) -> ConditionReport {
    let est = crate::norms::growth_norm(a, 2.0, grid);
    ConditionReport::new(ConditionKind::Nehari, "A", est, grid)
}

/// `‖A_j‖_{H^∞_{3-j}}` for `j = 0, 1, 2`.
pub fn order3_growth(coeffs: [&PowerSeries; 3], grid: &QuadratureGrid) -> [ConditionReport; 3] {
    std::array::from_fn(|j| {
        let est = crate::norms::growth_norm(coeffs[j], (3 - j) as f64, grid);
        ConditionReport::new(ConditionKind::Growth3, format!("A{j}"), est, grid)
    })
}

/// `sup_a ∫ |A_j| (1-|z|²)^{1-j} (1-|φ_a|²) dm` for `j = 0, 1, 2`.
pub fn order3_area(coeffs: [&PowerSeries; 3], grid: &QuadratureGrid) -> [ConditionReport; 3] {
    std::array::from_fn(|j| {
        let est = estimate(grid, |g| {
            let w: Vec<f64> = radial_weights(g, |r| (1.0 - r * r).powi(1 - j as i32));
            let vals: Vec<f64> = g.sample(coeffs[j]).iter().zip(&w).map(|(v, w)| v.norm() * w).collect();
            g.sup_moebius_weighted(&vals)
        });
        ConditionReport::new(ConditionKind::Area3, format!("A{j}"), est, grid)
    })
}

fn radial_weights(g: &QuadratureGrid, w: impl Fn(f64) -> f64) -> Vec<f64> {
    g.radial_nodes()
        .iter()
        .flat_map(|&(r, _)| std::iter::repeat_n(w(r), g.angular_count()))
        .collect()
}

/// `sup |A(z)| (1-|z|²)² (log(e/(1-|z|)))^α`.
pub fn lalpha_norm(a: &PowerSeries, alpha: f64, grid: &QuadratureGrid) -> ConditionReport {
    let est = estimate(grid, |g| {
        sup_over_grid(g, &g.sample(a), a.coeff(0).norm(), |v, r| {
            v * (1.0 - r * r).powi(2) * log_weight(r).powf(alpha)
        })
    });
    ConditionReport::new(ConditionKind::Lalpha, format!("alpha={alpha}"), est, grid)
}

fn squared_density(a: &PowerSeries, g: &QuadratureGrid, power: i32) -> Vec<f64> {
    let w = radial_weights(g, |r| (1.0 - r * r).powi(power));
    g.sample(a).iter().zip(&w).map(|(v, w)| v.norm_sqr() * w).collect()
}

fn lmoa_per_center(a: &PowerSeries, g: &QuadratureGrid, with_log: bool) -> Vec<f64> {
    g.moebius_weighted_integrals(&squared_density(a, g, 2))
        .into_iter()
        .zip(g.a_grid())
        .map(|(v, c)| if with_log { v * log_weight(c.norm()).powi(2) } else { v })
        .collect()
}

/// `sup_a (log(e/(1-|a|)))² ∫ |A|² (1-|z|²)² (1-|φ_a|²) dm`.
pub fn lmoa_quantity(a: &PowerSeries, grid: &QuadratureGrid) -> ConditionReport {
    let est = estimate(grid, |g| lmoa_per_center(a, g, true).into_iter().fold(0.0, f64::max));
    ConditionReport::new(ConditionKind::Lmoa, "A", est, grid)
}

/// `sup_a (log(e/(1-|a|)))²/(1-|a|) ∫_{S_a} |A|² (1-|z|²)³ dm`.
pub fn lmoa_square(a: &PowerSeries, grid: &QuadratureGrid) -> ConditionReport {
    let est = estimate(grid, |g| {
        g.carleson_masses(&squared_density(a, g, 3))
            .into_iter()
            .zip(g.a_grid())
            .map(|(m, c)| m * log_weight(c.norm()).powi(2) / (1.0 - c.norm()))
            .fold(0.0, f64::max)
    });
    ConditionReport::new(ConditionKind::LmoaSquare, "A", est, grid)
}

/// `sup_a ∫ |A|² (1-|z|²)² (1-|φ_a|²) dm`.
pub fn bmoa_dd(a: &PowerSeries, grid: &QuadratureGrid) -> ConditionReport {
    let est = estimate(grid, |g| lmoa_per_center(a, g, false).into_iter().fold(0.0, f64::max));
    ConditionReport::new(ConditionKind::BmoaDd, "A", est, grid)
}

/// `Σ |a_k|² (log n_k)³ / n_k⁴` for a lacunary series `Σ a_k z^{n_k}`.
pub fn lacunary_lmoa(coeffs: &[Complex64], freqs: &[u64]) -> Result<f64> {
    if coeffs.len() != freqs.len() {
        return Err(Error::InvalidArgument("coefficient and frequency counts differ".into()));
    }
    if freqs.first() == Some(&0) {
        return Err(Error::InvalidArgument("frequencies must be positive".into()));
    }
    for w in freqs.windows(2) {
        let q = w[1] as f64 / w[0] as f64;
        if q <= 1.0 {
            return Err(Error::NotLacunary(q));
        }
    }
    Ok(coeffs
        .iter()
        .zip(freqs)
        .map(|(a, &n)| {
            let n = n as f64;
            a.norm_sqr() * n.ln().powi(3) / n.powi(4)
        })
        .sum())
}

/// `∫_0^1 r^n (1-r)³ (log(e/(1-r)))³ dr`, by Gauss–Legendre on dyadic panels in `1-r`.
pub fn lacunary_moment(n: u64) -> f64 {
    let rule = gauss_legendre(16);
    let integrand = |u: f64| (1.0 - u).powf(n as f64) * u.powi(3) * (1.0 - u.ln()).powi(3);
    let mut total = 0.0;
    let mut hi = 1.0;
    for _ in 0..80 {
        let lo = hi / 2.0;
        let half = 0.5 * (hi - lo);
        total += rule.iter().map(|&(x, w)| w * half * integrand(lo + half * (x + 1.0))).sum::<f64>();
        hi = lo;
    }
    total
}

/// `lacunary_moment(n) / ((log n)³/n⁴)`.
pub fn lacunary_moment_ratio(n: u64) -> f64 {
    let x = n as f64;
    lacunary_moment(n) / (x.ln().powi(3) / x.powi(4))
}

/// `A(z) = (1-z)^{-2} (log(e/(1-z)))^{-1}` to order `n`.
pub fn log_damped_double_pole(n: usize) -> PowerSeries {
    let log = PowerSeries::from_fn(n, |k| {
        Complex64::new(if k == 0 { 1.0 } else { 1.0 / k as f64 }, 0.0)
    });
    PowerSeries::negative_binomial(Complex64::new(1.0, 0.0), 2, n)
        .mul(&log.recip().expect("log(e/(1-z)) is 1 at the origin"))
}

/// Synthetic division of `A_r` by `w - x`: the quotient coefficients and the
/// remainder `A_r(x)`. The kernel then splits as
/// `A_r(w)/(1 - x̄w) = -x (q(w) + A_r(x)/(w - x))` for `|x| = 1`, so every path
/// integral is a polynomial plus a closed-form logarithm, with no truncated tail.
fn divided_difference(ar: &[Complex64], x: Complex64) -> (Vec<Complex64>, Complex64) {
    let mut q = vec![ZERO; ar.len().saturating_sub(1).max(1)];
    let mut carry = ZERO;
    for k in (1..ar.len()).rev() {
        carry = ar[k] + x * carry;
        q[k - 1] = carry;
    }
    let rem = ar.first().copied().unwrap_or(ZERO) + x * carry;
    (q, rem)
}

/// `(1/2π) ∫ |∫_0^z ∫_0^ζ A(rw)/(x-w) dw dζ| |dx|` over `|x| = 1`, the total
/// variation of the explicit representing measure, with `m` angular nodes.
pub fn cauchy_bound(a: &PowerSeries, r: f64, z: Complex64, m: usize) -> Result<f64> {
    if !(z.norm() < 1.0) {
        return Err(Error::OutsideDisc { modulus: z.norm() });
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidArgument(format!("dilation {r} not in (0,1)")));
    }
    let ar = a.dilate(Complex64::new(r, 0.0));
    let total: f64 = (0..m)
        .into_par_iter()
        .map(|j| {
            let x = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64);
            let (q, rem) = divided_difference(ar.coeffs(), x);
            let q2 = PowerSeries::new(q).antiderivative(ZERO).antiderivative(ZERO).eval_unchecked(z);
            // ∫_0^z log(1 - x̄ζ) dζ = -x ((1 - x̄z) log(1 - x̄z) + x̄z).
            let u = 1.0 - x.conj() * z;
            (rem * x * (u * u.ln() + x.conj() * z) - q2).norm()
        })
        .sum();
    Ok(total / m as f64)
}

/// `(1/2π)∫ |∫_0^z A(rζ)/(1-e^{-it}ζ) dζ| dt` at every grid point, using the
/// grid's angular count for the `t` quadrature.
pub fn h1_means(a: &PowerSeries, r: f64, grid: &QuadratureGrid) -> Vec<f64> {
    let ar = a.dilate(Complex64::new(r, 0.0));
    let m = grid.angular_count();
    let pts = grid.points();
    // Fixed chunks summed in order keep the result independent of the thread count.
    let chunk = m.div_ceil(H1_CHUNKS);
    let partial: Vec<Vec<f64>> = (0..m)
        .step_by(chunk)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|start| {
            let mut acc = vec![0.0; grid.len()];
            for j in start..(start + chunk).min(m) {
                let x = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64);
                let (q, rem) = divided_difference(ar.coeffs(), x);
                let big_q = grid.sample(&PowerSeries::new(q).antiderivative(ZERO));
                for ((s, v), z) in acc.iter_mut().zip(big_q).zip(&pts) {
                    *s += (-x * (v + rem * (1.0 - x.conj() * z).ln())).norm();
                }
            }
            acc
        })
        .collect();
    let mut sums = vec![0.0; grid.len()];
    for acc in partial {
        sums.iter_mut().zip(acc).for_each(|(a, b)| *a += b);
    }
    sums.into_iter().map(|s| s / m as f64).collect()
}

/// `|∫_0^z A(rζ) dζ|` at every grid point.
pub fn primitive_moduli(a: &PowerSeries, r: f64, grid: &QuadratureGrid) -> Vec<f64> {
    let h = a.dilate(Complex64::new(r, 0.0)).antiderivative(ZERO);
    grid.sample(&h).iter().map(|v| v.norm()).collect()
}

/// `sup_a ∫ (h1 mean)² (1-|φ_a|²) dm` for the dilation `A(r·)`.
pub fn bmoa_h1_cond(a: &PowerSeries, r: f64, grid: &QuadratureGrid) -> ConditionReport {
    let est = estimate(grid, |g| {
        let t: Vec<f64> = h1_means(a, r, g).into_iter().map(|v| v * v).collect();
        g.sup_moebius_weighted(&t)
    });
    ConditionReport::new(ConditionKind::BmoaH1, format!("r={r}"), est, grid)
}

/// `S_A(f)(z) = ∫_0^z ∫_0^ζ f A`.
pub fn apply_sa(a: &PowerSeries, f: &PowerSeries) -> PowerSeries {
    f.mul(a).antiderivative(ZERO).antiderivative(ZERO)
}

/// Radial profiles used as decay diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfiles {
    /// `(|a|, max over centers of that modulus of the LMOA integrand)`.
    pub lmoa: Vec<(f64, f64)>,
    /// `(r, max_{|z|=r} |A| (1-r²)² log(e/(1-r)))`.
    pub log_weighted: Vec<(f64, f64)>,
}

/// Decay profiles of `A`. The LMOA profile uses the grid's centers grouped
/// by modulus; `radii` drives the pointwise profile.
pub fn decay_conditions(a: &PowerSeries, radii: &[f64], grid: &QuadratureGrid) -> DecayProfiles {
    let per_center = lmoa_per_center(a, grid, true);
    let mut lmoa: Vec<(f64, f64)> = Vec::new();
    for (v, c) in per_center.into_iter().zip(grid.a_grid()) {
        let rho = c.norm();
        match lmoa.iter_mut().find(|(r, _)| (*r - rho).abs() < 1e-12) {
            Some(entry) => entry.1 = entry.1.max(v),
            None => lmoa.push((rho, v)),
        }
    }
    lmoa.sort_by(|x, y| x.0.total_cmp(&y.0));
    let m = grid.angular_count();
    let log_weighted = radii
        .iter()
        .map(|&r| {
            let peak = a.sample_circle(r, m).iter().map(|v| v.norm()).fold(0.0, f64::max);
            (r, peak * (1.0 - r * r).powi(2) * log_weight(r))
        })
        .collect();
    DecayProfiles { lmoa, log_weighted }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_coefficient_gives_zero() {
        let z = PowerSeries::zero(16);
        let g = QuadratureGrid::for_order(16);
        assert_eq!(nehari_sup(&z, &g).value, 0.0);
        assert_eq!(lalpha_norm(&z, 1.0, &g).value, 0.0);
        assert_eq!(lmoa_quantity(&z, &g).value, 0.0);
        assert_eq!(lmoa_square(&z, &g).value, 0.0);
        assert_eq!(bmoa_dd(&z, &g).value, 0.0);
        assert_eq!(bmoa_h1_cond(&z, 0.9, &g).value, 0.0);
        assert_eq!(cauchy_bound(&z, 0.9, c(0.5, 0.0), 64).unwrap(), 0.0);
        assert!(order3_growth([&z, &z, &z], &g).iter().all(|r| r.value == 0.0));
        assert!(order3_area([&z, &z, &z], &g).iter().all(|r| r.value == 0.0));
        assert_eq!(apply_sa(&z, &PowerSeries::from_real(&[1.0; 17])), PowerSeries::zero(18));
        let d = decay_conditions(&z, &[0.5, 0.9], &g);
        assert!(d.lmoa.iter().chain(&d.log_weighted).all(|p| p.1 == 0.0));
    }

    #[test]
    fn tags_parse() {
        for k in ConditionKind::ALL {
            assert_eq!(k.tag().parse::<ConditionKind>().unwrap(), k);
        }
        assert!("nehary".parse::<ConditionKind>().is_err());
    }

    #[test]
    fn lacunary_single_term_and_gap_check() {
        let v = lacunary_lmoa(&[c(1.0, 0.0)], &[2]).unwrap();
        assert!((v - 2f64.ln().powi(3) / 16.0).abs() < 1e-16);
        assert!(matches!(lacunary_lmoa(&[c(1.0, 0.0); 2], &[4, 4]), Err(Error::NotLacunary(_))));
    }

    #[test]
    fn cauchy_bound_vanishes_on_empty_path() {
        let a = PowerSeries::constant(c(0.7, 0.0), 32);
        assert_eq!(cauchy_bound(&a, 0.9, c(0.0, 0.0), 64).unwrap(), 0.0);
    }

    #[test]
    fn second_primitive_of_coefficient() {
        let a = PowerSeries::from_real(&[1.0, 2.0, 3.0]);
        let s = apply_sa(&a, &PowerSeries::from_real(&[1.0, 0.0, 0.0]));
        assert_eq!(s, a.antiderivative(c(0.0, 0.0)).antiderivative(c(0.0, 0.0)));
    }
}
