//! Polar quadrature on the disc and the norm estimators built on it.
//!
//! Area integrals use the normalized measure `dm = 2r dr dθ/(2π)`. Radial
//! nodes come from composite Gauss–Legendre rules on the panels
//! `[0, 1/2], [1/2, 3/4], …, [1-2^{-j}, r_max]`, which cluster nodes
//! geometrically towards the boundary.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angle_gap, moebius_defect};
use crate::series::PowerSeries;

/// Radii of the default Möbius centers.
pub const DEFAULT_A_RADII: [f64; 8] = [0.0, 0.5, 0.9, 0.99, 0.995, 0.997, 0.998, 0.999];
/// Angles per nonzero radius of the default Möbius centers.
pub const DEFAULT_A_ANGLES: usize = 16;
pub const DEFAULT_R_MAX: f64 = 0.999;
pub const DEFAULT_NODES_PER_PANEL: usize = 8;
/// Growth factor between `r_max = 0.99` and `r_max = 0.999` that marks a
/// quantity as divergent.
pub const DIVERGENCE_FACTOR: f64 = 2.0;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.reverse();
    out
}

/// Möbius centers `{0} ∪ {r e^{2πik/16}}` for the default radii.
pub fn default_a_grid() -> Vec<Complex64> {
    moebius_centers(DEFAULT_A_ANGLES)
}

/// Möbius centers `{0} ∪ {r e^{2πik/angles}}` for the default radii.
pub fn moebius_centers(angles: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0)];
    for &r in DEFAULT_A_RADII.iter().filter(|&&r| r > 0.0) {
        for k in 0..angles {
            out.push(Complex64::from_polar(r, 2.0 * PI * k as f64 / angles as f64));
        }
    }
    out
}

/// Polar grid driving every disc integral and sup search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    radial: Vec<(f64, f64)>,
    angular_count: usize,
    r_max: f64,
    nodes_per_panel: usize,
    a_grid: Vec<Complex64>,
}

impl QuadratureGrid {
    pub fn new(nodes_per_panel: usize, angular_count: usize, r_max: f64) -> Result<Self> {
        if !(r_max > 0.0 && r_max < 1.0) {
            return Err(Error::InvalidArgument(format!("r_max {r_max} not in (0,1)")));
        }
        if nodes_per_panel == 0 || angular_count == 0 {
            return Err(Error::InvalidArgument("grid sizes must be positive".into()));
        }
        let mut breaks = vec![0.0];
        let mut j = 1;
        loop {
            let b = 1.0 - 0.5f64.powi(j);
            if b >= r_max {
                break;
            }
            breaks.push(b);
            j += 1;
        }
        breaks.push(r_max);
        let rule = gauss_legendre(nodes_per_panel);
        let mut radial = Vec::with_capacity(rule.len() * (breaks.len() - 1));
        for w in breaks.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let half = 0.5 * (hi - lo);
            for &(x, wt) in &rule {
                radial.push((lo + half * (x + 1.0), half * wt));
            }
        }
        Ok(QuadratureGrid {
            radial,
            angular_count,
            r_max,
            nodes_per_panel,
            a_grid: default_a_grid(),
        })
    }

    /// Default grid for series of order `n`: 8 nodes per panel, `2n+2`
    /// angles, `r_max = 0.999`.
    pub fn for_order(n: usize) -> Self {
        Self::new(DEFAULT_NODES_PER_PANEL, 2 * n + 2, DEFAULT_R_MAX).expect("default grid is valid")
    }

    pub fn with_r_max(&self, r_max: f64) -> Result<Self> {
        let mut g = Self::new(self.nodes_per_panel, self.angular_count, r_max)?;
        g.a_grid = self.a_grid.clone();
        Ok(g)
    }

    pub fn with_angular_count(&self, m: usize) -> Result<Self> {
        let mut g = Self::new(self.nodes_per_panel, m, self.r_max)?;
        g.a_grid = self.a_grid.clone();
        Ok(g)
    }

    pub fn with_a_grid(mut self, a_grid: Vec<Complex64>) -> Self {
        self.a_grid = a_grid;
        self
    }

    /// Twice the radial and angular resolution.
    pub fn refined(&self) -> Self {
        let mut g = Self::new(2 * self.nodes_per_panel, 2 * self.angular_count, self.r_max)
            .expect("refinement keeps a valid grid");
        g.a_grid = self.a_grid.clone();
        g
    }

    /// Half the radial and angular resolution.
    pub fn coarsened(&self) -> Self {
        let mut g = Self::new(
            (self.nodes_per_panel / 2).max(1),
            self.angular_count.div_ceil(2),
            self.r_max,
        )
        .expect("coarsening keeps a valid grid");
        g.a_grid = self.a_grid.clone();
        g
    }

    /// Radial nodes `(r_i, w_i)`; the weights integrate `dr` on `[0, r_max]`.
    pub fn radial_nodes(&self) -> &[(f64, f64)] {
        &self.radial
    }

    pub fn angular_count(&self) -> usize {
        self.angular_count
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn nodes_per_panel(&self) -> usize {
        self.nodes_per_panel
    }

    pub fn a_grid(&self) -> &[Complex64] {
        &self.a_grid
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.radial.len() * self.angular_count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points, radius-major.
    pub fn points(&self) -> Vec<Complex64> {
        let m = self.angular_count;
        let units: Vec<Complex64> = (0..m)
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64))
            .collect();
        self.radial
            .iter()
            .flat_map(|&(r, _)| units.iter().map(move |&u| u * r))
            .collect()
    }

    /// Weights of the normalized area measure at each grid point.
    pub fn area_weights(&self) -> Vec<f64> {
        let m = self.angular_count as f64;
        self.radial
            .iter()
            .flat_map(|&(r, w)| std::iter::repeat_n(2.0 * r * w / m, self.angular_count))
            .collect()
    }

    /// Values of a series at the grid points.
    pub fn sample(&self, f: &PowerSeries) -> Vec<Complex64> {
        self.radial
            .par_iter()
            .flat_map_iter(|&(r, _)| f.sample_circle(r, self.angular_count))
            .collect()
    }

    /// Values of a pointwise function at the grid points.
    pub fn tabulate(&self, density: impl Fn(Complex64) -> f64 + Sync + Send) -> Vec<f64> {
        self.points().into_par_iter().map(density).collect()
    }

    /// `∫ density dm` over `|z| ≤ r_max` for grid-sampled values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.len(), "density must be sampled on this grid");
        self.area_weights().iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// `∫ values(z) (1 - |φ_a(z)|²) dm(z)` for each Möbius center `a`.
    pub fn moebius_weighted_integrals(&self, values: &[f64]) -> Vec<f64> {
        let pts = self.points();
        let weighted: Vec<f64> = self.area_weights().iter().zip(values).map(|(w, v)| w * v).collect();
        self.a_grid
            .par_iter()
            .map(|&a| {
                pts.iter()
                    .zip(&weighted)
                    .map(|(&z, &v)| v * moebius_defect(a, z))
                    .sum::<f64>()
            })
            .collect()
    }

    /// `sup_a ∫ values(z) (1 - |φ_a(z)|²) dm(z)` over the Möbius centers.
    pub fn sup_moebius_weighted(&self, values: &[f64]) -> f64 {
        self.moebius_weighted_integrals(values).into_iter().fold(0.0, f64::max)
    }

    /// `∫_{S_a} values dm` for each Möbius center `a`.
    ///
    /// Each node stands for a polar cell: the radial cells partition every panel
    /// by cumulative Gauss weights and the angular cells have width `2π/M`. A
    /// node contributes the fraction of its cell inside `S_a`, so the mass varies
    /// continuously with `a` instead of jumping as the square's edges cross nodes.
    pub fn carleson_masses(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.len(), "density must be sampled on this grid");
        let m = self.angular_count;
        let weighted: Vec<f64> = self.area_weights().iter().zip(values).map(|(w, v)| w * v).collect();
        let mut edges = Vec::with_capacity(self.radial.len());
        let mut lo = 0.0;
        for &(_, w) in &self.radial {
            edges.push((lo, lo + w));
            lo += w;
        }
        let h = 2.0 * PI / m as f64;
        self.a_grid
            .par_iter()
            .map(|&a| {
                let ra = a.norm();
                if ra == 0.0 {
                    return weighted.iter().sum();
                }
                let half = (1.0 - ra) / 2.0;
                let centre = (a.arg() / h).round() as i64;
                let span = (half / h).ceil() as i64 + 1;
                let angular: Vec<(usize, f64)> = (centre - span..=centre + span)
                    .map(|k| k.rem_euclid(m as i64) as usize)
                    .collect::<std::collections::BTreeSet<_>>()
                    .into_iter()
                    .filter_map(|j| {
                        let gap = angle_gap(2.0 * PI * j as f64 / m as f64, a.arg());
                        let overlap = (gap + h / 2.0).min(half) - (gap - h / 2.0).max(-half);
                        (overlap > 0.0).then(|| (j, (overlap / h).min(1.0)))
                    })
                    .collect();
                edges
                    .iter()
                    .enumerate()
                    .filter(|(_, &(_, hi))| hi > ra)
                    .map(|(i, &(lo, hi))| {
                        let fr = ((hi - lo.max(ra)) / (hi - lo)).min(1.0);
                        fr * angular.iter().map(|&(j, fa)| fa * weighted[i * m + j]).sum::<f64>()
                    })
                    .sum()
            })
            .collect()
    }
}

/// `∫ density dm` for values sampled on the grid.
pub fn area_integral(density: &[f64], grid: &QuadratureGrid) -> f64 {
    grid.integrate(density)
}

/// Estimate at the working grid, at half resolution, and the divergence
/// diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub value_coarse: f64,
    /// The value more than doubled when `r_max` went from 0.99 to 0.999.
    pub divergence_flag: bool,
    /// A Möbius re-expansion inside the estimator lost accuracy.
    pub accuracy_loss: bool,
}

impl NormEstimate {
    /// Relative change between the two resolutions.
    pub fn refinement_change(&self) -> f64 {
        let scale = self.value.abs().max(f64::MIN_POSITIVE);
        (self.value - self.value_coarse).abs() / scale
    }
}

/// Runs an estimator on the grid, its coarsening, and at `r_max ∈ {0.99, 0.999}`.
pub fn try_estimate(
    grid: &QuadratureGrid,
    est: impl Fn(&QuadratureGrid) -> Result<f64>,
) -> Result<NormEstimate> {
    let value = est(grid)?;
    let value_coarse = est(&grid.coarsened())?;
    let near = est(&grid.with_r_max(0.99)?)?;
    let far = if grid.r_max() == 0.999 { value } else { est(&grid.with_r_max(0.999)?)? };
    Ok(NormEstimate {
        value,
        value_coarse,
        divergence_flag: far > DIVERGENCE_FACTOR * near,
        accuracy_loss: false,
    })
}

/// Infallible form of [`try_estimate`].
pub fn estimate(grid: &QuadratureGrid, est: impl Fn(&QuadratureGrid) -> f64) -> NormEstimate {
    try_estimate(grid, |g| Ok(est(g))).expect("infallible estimator")
}

/// Discrete integral mean `((1/M) Σ |f(r e^{2πij/M})|^p)^{1/p}`.
pub fn mp_mean(f: &PowerSeries, r: f64, p: f64, m: usize) -> f64 {
    let vals = f.sample_circle(r, m);
    (vals.iter().map(|v| v.norm().powf(p)).sum::<f64>() / m as f64).powf(1.0 / p)
}

/// Integral means at every radial node and at `r_max`, checked to be
/// nondecreasing.
pub fn hp_means(f: &PowerSeries, p: f64, grid: &QuadratureGrid) -> Result<Vec<(f64, f64)>> {
    if !(p > 0.0) {
        return Err(Error::InvalidArgument(format!("exponent p = {p} must be positive")));
    }
    let mut radii: Vec<f64> = grid.radial_nodes().iter().map(|n| n.0).collect();
    radii.push(grid.r_max());
    let means: Vec<(f64, f64)> = radii
        .par_iter()
        .map(|&r| (r, mp_mean(f, r, p, grid.angular_count())))
        .collect();
    for w in means.windows(2) {
        let (before, after) = (w[0].1, w[1].1);
        if after < before - 1e-10 * before.max(1.0) {
            return Err(Error::NonMonotoneMeans { before, after });
        }
    }
    Ok(means)
}

/// `‖f‖_{H^p}` estimated by the integral mean at `r_max`.
pub fn hp_norm(f: &PowerSeries, p: f64, grid: &QuadratureGrid) -> Result<NormEstimate> {
    try_estimate(grid, |g| Ok(hp_means(f, p, g)?.last().expect("nonempty").1))
}

fn sup_weighted(values: &[Complex64], grid: &QuadratureGrid, origin: Complex64, q: f64) -> f64 {
    let m = grid.angular_count();
    let inner = grid
        .radial_nodes()
        .iter()
        .enumerate()
        .map(|(i, &(r, _))| {
            let w = (1.0 - r * r).powf(q);
            values[i * m..(i + 1) * m].iter().map(|v| v.norm()).fold(0.0, f64::max) * w
        })
        .fold(0.0, f64::max);
    inner.max(origin.norm())
}

/// `sup |f(z)| (1-|z|²)^q` on the grid points and the origin.
pub fn growth_sup(f: &PowerSeries, q: f64, grid: &QuadratureGrid) -> f64 {
    sup_weighted(&grid.sample(f), grid, f.coeff(0), q)
}

/// `‖f‖_{H^∞_q}`.
pub fn growth_norm(f: &PowerSeries, q: f64, grid: &QuadratureGrid) -> NormEstimate {
    estimate(grid, |g| growth_sup(f, q, g))
}

/// Bloch seminorm `sup |f'(z)| (1-|z|²)`.
pub fn bloch_norm(f: &PowerSeries, grid: &QuadratureGrid) -> NormEstimate {
    growth_norm(&f.derivative(), 1.0, grid)
}

/// `(r, max_j |f'(r e^{2πij/M})| (1-r²))` for each radius.
pub fn decay_profile(f: &PowerSeries, radii: &[f64], m: usize) -> Vec<(f64, f64)> {
    let d = f.derivative();
    radii
        .iter()
        .map(|&r| {
            let peak = d.sample_circle(r, m).iter().map(|v| v.norm()).fold(0.0, f64::max);
            (r, peak * (1.0 - r * r))
        })
        .collect()
}

/// `sup_a ∫ |f'|² (1 - |φ_a|²) dm`.
pub fn bmoa_garsia(f: &PowerSeries, grid: &QuadratureGrid) -> NormEstimate {
    let d = f.derivative();
    estimate(grid, |g| {
        let vals: Vec<f64> = g.sample(&d).iter().map(|v| v.norm_sqr()).collect();
        g.sup_moebius_weighted(&vals)
    })
}

/// `‖f∘φ_a - f(a)‖²_{H²}` at radius `r` and the composition accuracy flag.
pub fn bmoa_h2_at(f: &PowerSeries, a: Complex64, r: f64, m: usize) -> Result<(f64, bool)> {
    let n = f.order();
    let comp = f.compose_moebius(a, 2 * n + 2)?;
    let fa = f.eval(a)?;
    let g = comp.series.sub(&PowerSeries::constant(fa, n));
    Ok((mp_mean(&g, r, 2.0, m).powi(2), comp.accuracy_loss))
}

/// `sup_a ‖f∘φ_a - f(a)‖²_{H²}` over the Möbius centers.
pub fn bmoa_h2_def(f: &PowerSeries, grid: &QuadratureGrid) -> Result<NormEstimate> {
    let run = |g: &QuadratureGrid| -> Result<(f64, bool)> {
        let rows: Result<Vec<(f64, bool)>> = g
            .a_grid()
            .par_iter()
            .map(|&a| bmoa_h2_at(f, a, g.r_max(), g.angular_count()))
            .collect();
        Ok(rows?.into_iter().fold((0.0, false), |(v, l), (x, y)| (v.max(x), l || y)))
    };
    let (_, lost) = run(grid)?;
    let mut est = try_estimate(grid, |g| Ok(run(g)?.0))?;
    est.accuracy_loss = lost;
    Ok(est)
}

/// `sup_a μ(S_a)/(1-|a|)` for `dμ = density dm`.
pub fn carleson_norm(density: impl Fn(Complex64) -> f64 + Sync, grid: &QuadratureGrid) -> NormEstimate {
    estimate(grid, |g| carleson_sup(&g.tabulate(&density), g))
}

/// `sup_a μ(S_a)/(1-|a|)` for grid-sampled density values.
pub fn carleson_sup(values: &[f64], grid: &QuadratureGrid) -> f64 {
    grid.carleson_masses(values)
        .iter()
        .zip(grid.a_grid())
        .map(|(m, a)| m / (1.0 - a.norm()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let rule = gauss_legendre(6);
        for k in 0..12 {
            let got: f64 = rule.iter().map(|&(x, w)| w * x.powi(k)).sum();
            let want = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert!((got - want).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn radial_weights_integrate_polynomials() {
        let g = QuadratureGrid::new(5, 4, 0.93).unwrap();
        for k in 0..10 {
            let got: f64 = g.radial_nodes().iter().map(|&(r, w)| w * r.powi(k)).sum();
            let want = 0.93f64.powi(k + 1) / (k as f64 + 1.0);
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn means_of_simple_series() {
        assert!((mp_mean(&PowerSeries::from_real(&[-2.0]), 0.4, 1.5, 7) - 2.0).abs() < 1e-15);
        for p in [0.5, 1.0, 3.0] {
            assert!((mp_mean(&PowerSeries::from_real(&[0.0, 1.0]), 0.6, p, 9) - 0.6).abs() < 1e-15);
        }
    }

    #[test]
    fn hp_norm_of_monomial() {
        let f = PowerSeries::monomial(5, 5);
        let g = QuadratureGrid::for_order(5);
        let est = hp_norm(&f, 2.0, &g).unwrap();
        assert!((est.value - 0.999f64.powi(5)).abs() < 1e-14);
        assert!(!est.divergence_flag);
    }

    #[test]
    fn growth_and_bloch_of_identity() {
        let f = PowerSeries::from_real(&[0.0, 1.0]);
        let g = QuadratureGrid::for_order(1);
        assert!((growth_norm(&PowerSeries::from_real(&[3.0]), 0.0, &g).value - 3.0).abs() < 1e-15);
        assert!((bloch_norm(&f, &g).value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constants_have_no_oscillation() {
        let f = PowerSeries::from_real(&[1.5, 0.0, 0.0]);
        let g = QuadratureGrid::for_order(2);
        assert_eq!(bmoa_garsia(&f, &g).value, 0.0);
        assert!(bmoa_h2_def(&f, &g).unwrap().value < 1e-28);
    }

    #[test]
    fn carleson_of_unit_density() {
        let g = QuadratureGrid::for_order(8);
        let est = carleson_norm(|_| 1.0, &g);
        assert!(est.value >= 0.998);
        let at_origin = carleson_sup(&g.tabulate(|_| 1.0), &g.clone().with_a_grid(vec![c(0.0, 0.0)]));
        assert!((at_origin - 0.999f64.powi(2)).abs() < 1e-12);
    }
}
