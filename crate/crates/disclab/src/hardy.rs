//! Hardy-space tools: the Hardy–Stein–Spencer identity, non-tangential
//! regions, both sides of the area-integral inequalities for `‖f‖^p_{H^p}`,
//! the bound for zero-free functions, and `H^p` membership experiments for
//! solutions of `f'' + A f = 0`.
//!
//! Integral means use an angular count that grows like `1/(1-r)` near the
//! boundary so that boundary zeros and poles just outside the disc are
//! resolved.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::{bmoa_dd, ConditionReport};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::norms::{carleson_norm, estimate, gauss_legendre, NormEstimate, QuadratureGrid};
use crate::ode::{solve_series, OdeProblem};
use crate::series::PowerSeries;

/// Default aperture of the approach regions.
pub const DEFAULT_APERTURE: f64 = 2.0;
/// Angular nodes per unit of `1/(1-r)`.
pub const ANGULAR_DENSITY: f64 = 64.0;
/// Largest angular count used for a single circle.
pub const MAX_ANGULAR: usize = 1 << 20;
/// Dyadic panels towards the origin for integrands carrying `log(1/|z|)`.
const ORIGIN_LEVELS: i32 = 40;
/// Exponents of the zero-free experiment.
pub const ZERO_FREE_EXPONENTS: [f64; 4] = [1.0, 0.5, 0.25, 0.125];
/// Radii of the integral-mean profiles in the membership experiment.
pub const PROFILE_RADII: [f64; 6] = [0.5, 0.9, 0.95, 0.99, 0.995, 0.999];

/// Angular count at radius `r`: the grid's count, raised to resolve scale `1-r`.
pub fn angular_count_at(grid: &QuadratureGrid, r: f64) -> usize {
    let need = (ANGULAR_DENSITY / (1.0 - r).max(1e-12)).ceil() as usize;
    grid.angular_count().max(need.next_power_of_two()).min(MAX_ANGULAR)
}

/// Discrete `M_p(r, f)^p`.
pub fn mean_p(f: &PowerSeries, r: f64, p: f64, m: usize) -> f64 {
    if f.coeffs()[1..].iter().all(|c| *c == Complex64::new(0.0, 0.0)) {
        return f.coeff(0).norm().powf(p);
    }
    let vals = f.sample_circle(r, m);
    vals.iter().map(|v| v.norm().powf(p)).sum::<f64>() / m as f64
}

/// `‖f‖^p_{H^p}` estimated by `M_p(r_max, f)^p`.
pub fn hp_norm_p(f: &PowerSeries, p: f64, grid: &QuadratureGrid) -> f64 {
    mean_p(f, grid.r_max(), p, angular_count_at(grid, grid.r_max()))
}

/// The grid's radial nodes with the first panel replaced by dyadic panels
/// towards the origin.
fn origin_graded_nodes(grid: &QuadratureGrid) -> Vec<(f64, f64)> {
    let rule = gauss_legendre(grid.nodes_per_panel());
    let mut out = Vec::new();
    let mut panel = |lo: f64, hi: f64| {
        let half = 0.5 * (hi - lo);
        for &(x, w) in &rule {
            out.push((lo + half * (x + 1.0), half * w));
        }
    };
    panel(0.0, 0.5f64.powi(ORIGIN_LEVELS));
    for j in (1..ORIGIN_LEVELS).rev() {
        panel(0.5f64.powi(j + 1), 0.5f64.powi(j));
    }
    out.extend(grid.radial_nodes().iter().copied().filter(|&(r, _)| r > 0.5));
    out
}

/// Angular means of `|f|^{p-2} |d|²` at radius `r` for each exponent, with
/// the zero-node policy: at an exact zero of `f` the sample is 0 if `d` also
/// vanishes, and is otherwise re-evaluated at radius `r - step/2`. Returns
/// the means and the number of perturbed samples.
fn weighted_means(f: &PowerSeries, d: &PowerSeries, ps: &[f64], r: f64, step: f64, m: usize) -> (Vec<f64>, usize) {
    let (fv, dv) = (f.sample_circle(r, m), d.sample_circle(r, m));
    let mut perturbed = 0;
    let mut sums = vec![0.0; ps.len()];
    for (j, (a, b)) in fv.iter().zip(&dv).enumerate() {
        let (mut fa, mut db2) = (a.norm(), b.norm_sqr());
        if fa == 0.0 && db2 > 0.0 && ps.iter().any(|&p| p < 2.0) {
            perturbed += 1;
            let z = Complex64::from_polar(r - 0.5 * step, 2.0 * PI * j as f64 / m as f64);
            fa = f.eval_unchecked(z).norm();
            db2 = d.eval_unchecked(z).norm_sqr();
        }
        for (s, &p) in sums.iter_mut().zip(ps) {
            if db2 > 0.0 {
                *s += fa.powf(p - 2.0) * db2;
            }
        }
    }
    (sums.into_iter().map(|s| s / m as f64).collect(), perturbed)
}

/// Both sides of the Hardy–Stein–Spencer identity at `r = r_max`:
/// `M_p(r)^p = |f(0)|^p + (p²/2) ∫_{|z|<r} |f|^{p-2} |f'|² log(r/|z|) dm`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HssReport {
    pub norm_p: f64,
    pub origin_p: f64,
    pub area: f64,
    pub residual: f64,
    /// Samples moved off an exact zero of `f`.
    pub perturbed_nodes: usize,
}

pub fn hss_report(f: &PowerSeries, p: f64, grid: &QuadratureGrid) -> Result<HssReport> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("exponent p = {p} must be positive")));
    }
    let r = grid.r_max();
    let d = f.derivative();
    let rows: Vec<(f64, usize)> = origin_graded_nodes(grid)
        .par_iter()
        .map(|&(rho, w)| {
            let (mean, k) = weighted_means(f, &d, &[p], rho, w, angular_count_at(grid, rho));
            (mean[0] * (r / rho).ln() * 2.0 * rho * w, k)
        })
        .collect();
    let area: f64 = rows.iter().map(|x| x.0).sum();
    let perturbed_nodes = rows.iter().map(|x| x.1).sum();
    let norm_p = hp_norm_p(f, p, grid);
    let origin_p = f.coeff(0).norm().powf(p);
    let residual = (norm_p - origin_p - 0.5 * p * p * area).abs();
    Ok(HssReport { norm_p, origin_p, area, residual, perturbed_nodes })
}

pub fn hss_residual(f: &PowerSeries, p: f64, grid: &QuadratureGrid) -> Result<f64> {
    Ok(hss_report(f, p, grid)?.residual)
}

/// Approach regions `Γ(ζ) = {z : |z - ζ| ≤ α(1-|z|)}` sampled at
/// `boundary_nodes` equally spaced vertices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NontangentialParams {
    aperture: f64,
    boundary_nodes: usize,
}

impl NontangentialParams {
    pub fn new(aperture: f64, boundary_nodes: usize) -> Result<Self> {
        if !(aperture > 1.0 && aperture.is_finite()) {
            return Err(Error::InvalidArgument(format!("aperture {aperture} must exceed 1")));
        }
        if boundary_nodes == 0 {
            return Err(Error::InvalidArgument("need at least one boundary node".into()));
        }
        Ok(NontangentialParams { aperture, boundary_nodes })
    }

    pub fn aperture(&self) -> f64 {
        self.aperture
    }

    pub fn boundary_nodes(&self) -> usize {
        self.boundary_nodes
    }

    pub fn contains(&self, zeta: Complex64, z: Complex64) -> bool {
        (z - zeta).norm() <= self.aperture * (1.0 - z.norm())
    }
}

impl Default for NontangentialParams {
    fn default() -> Self {
        NontangentialParams { aperture: DEFAULT_APERTURE, boundary_nodes: 256 }
    }
}

/// `f★(ζ) = sup |f|` over grid points of `Γ(ζ)` (and the origin).
pub fn nt_max(f: &PowerSeries, zeta: Complex64, params: &NontangentialParams, grid: &QuadratureGrid) -> f64 {
    grid.points()
        .iter()
        .zip(grid.sample(f))
        .filter(|(&z, _)| params.contains(zeta, z))
        .map(|(_, v)| v.norm())
        .fold(f.coeff(0).norm(), f64::max)
}

/// `f★` at every boundary node.
pub fn nt_max_profile(f: &PowerSeries, params: &NontangentialParams, grid: &QuadratureGrid) -> Vec<f64> {
    let pts = grid.points();
    let vals: Vec<f64> = grid.sample(f).iter().map(|v| v.norm()).collect();
    let b = params.boundary_nodes;
    (0..b)
        .into_par_iter()
        .map(|j| {
            let zeta = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / b as f64);
            pts.iter()
                .zip(&vals)
                .filter(|(&z, _)| params.contains(zeta, z))
                .map(|(_, &v)| v)
                .fold(f.coeff(0).norm(), f64::max)
        })
        .collect()
}

/// Arc length of the shadow `I(z) = {ζ ∈ 𝕋 : z ∈ Γ(ζ)}`.
pub fn shadow_length(z: Complex64, aperture: f64) -> f64 {
    let r = z.norm();
    if r >= 1.0 {
        return 0.0;
    }
    if r == 0.0 {
        return if aperture >= 1.0 { 2.0 * PI } else { 0.0 };
    }
    // |z - e^{iφ}|² = 1 + r² - 2r cos φ ≤ α²(1-r)².
    let c = (1.0 + r * r - aperture * aperture * (1.0 - r) * (1.0 - r)) / (2.0 * r);
    if c <= -1.0 {
        2.0 * PI
    } else if c >= 1.0 {
        0.0
    } else {
        2.0 * c.acos()
    }
}

/// The quantities on both sides of the area-integral inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MainSides {
    pub p: f64,
    pub k: usize,
    /// `‖f‖^p_{H^p}` estimate.
    pub norm_p: f64,
    /// `∫ |f|^{p-2} |f^{(k)}|² (1-|z|²)^{2k-1} dm` over `|z| ≤ r_max`.
    pub area: f64,
    /// `Σ_{j<k} |f^{(j)}(0)|^p`.
    pub initial: f64,
    pub perturbed_nodes: usize,
}

impl MainSides {
    /// Constant needed for `‖f‖^p ≤ C (area + initial)`.
    pub fn ratio_upper(&self) -> f64 {
        self.norm_p / (self.area + self.initial)
    }

    /// Constant needed for `area + initial ≤ C ‖f‖^p`.
    pub fn ratio_lower(&self) -> f64 {
        (self.area + self.initial) / self.norm_p
    }
}

pub fn prop_main_sides(f: &PowerSeries, p: f64, k: usize, grid: &QuadratureGrid) -> Result<MainSides> {
    Ok(prop_main_sides_multi(f, &[p], k, grid)?.remove(0))
}

/// [`prop_main_sides`] for several exponents from one set of samples.
pub fn prop_main_sides_multi(f: &PowerSeries, ps: &[f64], k: usize, grid: &QuadratureGrid) -> Result<Vec<MainSides>> {
    if ps.iter().any(|p| !(*p > 0.0 && p.is_finite())) || k == 0 {
        return Err(Error::InvalidArgument(format!("need p > 0 and k ≥ 1, got p = {ps:?}, k = {k}")));
    }
    let dk = f.nth_derivative(k);
    let rows: Vec<(Vec<f64>, usize)> = grid
        .radial_nodes()
        .par_iter()
        .map(|&(rho, w)| {
            let (means, n) = weighted_means(f, &dk, ps, rho, w, angular_count_at(grid, rho));
            let scale = (1.0 - rho * rho).powi(2 * k as i32 - 1) * 2.0 * rho * w;
            (means.into_iter().map(|v| v * scale).collect(), n)
        })
        .collect();
    let perturbed_nodes = rows.iter().map(|x| x.1).sum();
    let r = grid.r_max();
    let boundary = if f.coeffs()[1..].iter().all(|c| c.norm() == 0.0) {
        None
    } else {
        Some(f.sample_circle(r, angular_count_at(grid, r)))
    };
    Ok(ps
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let mut factorial = 1.0;
            let mut initial = 0.0;
            for j in 0..k {
                if j > 0 {
                    factorial *= j as f64;
                }
                initial += (f.coeff(j).norm() * factorial).powf(p);
            }
            let norm_p = match &boundary {
                None => f.coeff(0).norm().powf(p),
                Some(v) => v.iter().map(|x| x.norm().powf(p)).sum::<f64>() / v.len() as f64,
            };
            MainSides { p, k, norm_p, area: rows.iter().map(|x| x.0[i]).sum(), initial, perturbed_nodes }
        })
        .collect())
}

/// Which of the two inequalities a constant refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Inequality {
    /// `‖f‖^p ≲ area + initial`, for `p ≤ 2`.
    Upper,
    /// `area + initial ≲ ‖f‖^p`, for `p ≥ 2`.
    Lower,
}

/// Corpus-wide constant for one `(p, k)` and the entry attaining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantTrack {
    pub inequality: Inequality,
    pub p: f64,
    pub k: usize,
    pub constant: f64,
    pub worst_entry: String,
}

/// Largest ratio over the corpus for each `(inequality, p, k)`; `Upper` for
/// `p ≤ 2` and `Lower` for `p ≥ 2`.
pub fn main_constants(
    corpus: &Corpus,
    order: usize,
    ps: &[f64],
    ks: &[usize],
    grid: &QuadratureGrid,
) -> Result<Vec<ConstantTrack>> {
    let series: Vec<(String, PowerSeries)> =
        corpus.entries.iter().map(|e| (e.name.clone(), e.spec.series(order))).collect();
    let all: Vec<Vec<Vec<MainSides>>> = ks
        .iter()
        .map(|&k| series.iter().map(|(_, f)| prop_main_sides_multi(f, ps, k, grid)).collect::<Result<_>>())
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (pi, &p) in ps.iter().enumerate() {
        for (ki, &k) in ks.iter().enumerate() {
            let sides: Vec<MainSides> = all[ki].iter().map(|row| row[pi]).collect();
            for (ineq, applies) in [(Inequality::Upper, p <= 2.0), (Inequality::Lower, p >= 2.0)] {
                if !applies {
                    continue;
                }
                let (idx, constant) = sides
                    .iter()
                    .map(|s| match ineq {
                        Inequality::Upper => s.ratio_upper(),
                        Inequality::Lower => s.ratio_lower(),
                    })
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
                out.push(ConstantTrack { inequality: ineq, p, k, constant, worst_entry: series[idx].0.clone() });
            }
        }
    }
    Ok(out)
}

/// `sup |f''/f'| (1-|z|²)` and `sup |f^{(k+1)}/f'| (1-|z|²)^k` for `k = 1, 2, 3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocUnivReport {
    pub margin: f64,
    pub induction: [f64; 3],
}

pub fn loc_univ_margin(f: &PowerSeries, grid: &QuadratureGrid) -> Result<LocUnivReport> {
    let d1 = f.derivative();
    let higher: Vec<PowerSeries> = (2..=4).map(|k| f.nth_derivative(k)).collect();
    let m = grid.angular_count();
    let s1 = grid.sample(&d1);
    let sk: Vec<Vec<Complex64>> = higher.iter().map(|d| grid.sample(d)).collect();
    let scale = s1.iter().map(|v| v.norm()).fold(d1.coeff(0).norm(), f64::max);
    let mut induction = [0.0f64; 3];
    let origin = d1.coeff(0);
    if origin.norm() <= 1e-14 * scale {
        return Err(Error::VanishingDerivative { radius: 0.0 });
    }
    for (k, h) in higher.iter().enumerate() {
        // f^{(k+2)}(0) = (k+2)! c_{k+2}; the series of the derivative stores it at index 0.
        induction[k] = (h.coeff(0) / origin).norm();
    }
    for (i, &(r, _)) in grid.radial_nodes().iter().enumerate() {
        let defect = 1.0 - r * r;
        for j in 0..m {
            let v = s1[i * m + j];
            if v.norm() <= 1e-14 * scale {
                return Err(Error::VanishingDerivative { radius: r });
            }
            for k in 0..3 {
                let q = (sk[k][i * m + j] / v).norm() * defect.powi(k as i32 + 1);
                induction[k] = induction[k].max(q);
            }
        }
    }
    Ok(LocUnivReport { margin: induction[0], induction })
}

/// One exponent of the zero-free experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroFreeRow {
    pub p: f64,
    /// `‖f‖^p_{H^p}`.
    pub norm_p: f64,
    /// `∫ |f|^{p-2} |f''|² (1-|z|²)³ dm`.
    pub area: f64,
    pub f0_p: f64,
    pub f1_p: f64,
    /// Smallest `C ≥ 0` with `‖f‖^p ≤ C·area + |f(0)|^p + |f'(0)|^p`.
    pub c_required: f64,
    /// `(‖f‖^p - |f(0)|^p)/area`, the constant the zero-free argument scales like `p²`.
    pub c_scaling: f64,
}

/// Zero-free experiment over [`ZERO_FREE_EXPONENTS`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroFreeReport {
    /// `sup |f'/f| (1-|z|²) = ‖log f‖_B`.
    pub log_bloch: f64,
    pub rows: Vec<ZeroFreeRow>,
    /// Least-squares slope of `log c_scaling` against `log p`.
    pub fitted_exponent: f64,
}

/// Winding number of `f` around 0 on the circle of radius `r`.
pub fn winding_number(f: &PowerSeries, r: f64, m: usize) -> i64 {
    let v = f.sample_circle(r, m);
    let total: f64 = (0..m).map(|j| (v[(j + 1) % m] / v[j]).arg()).sum();
    (total / (2.0 * PI)).round() as i64
}

pub fn nonvanishing_bound_check(f: &PowerSeries, grid: &QuadratureGrid) -> Result<ZeroFreeReport> {
    let r = grid.r_max();
    let m = angular_count_at(grid, r);
    let boundary = f.sample_circle(r, m);
    if boundary.iter().any(|v| v.norm() == 0.0) || f.coeff(0).norm() == 0.0 {
        return Err(Error::NotZeroFree { winding: 0 });
    }
    let winding = winding_number(f, r, m);
    if winding != 0 {
        return Err(Error::NotZeroFree { winding });
    }
    let d1 = f.derivative();
    let (fv, dv) = (grid.sample(f), grid.sample(&d1));
    let mut log_bloch = (d1.coeff(0) / f.coeff(0)).norm();
    for (i, &(rho, _)) in grid.radial_nodes().iter().enumerate() {
        for j in 0..grid.angular_count() {
            let k = i * grid.angular_count() + j;
            log_bloch = log_bloch.max((dv[k] / fv[k]).norm() * (1.0 - rho * rho));
        }
    }
    let f0 = f.coeff(0).norm();
    let f1 = f.coeff(1).norm();
    let rows: Vec<ZeroFreeRow> = prop_main_sides_multi(f, &ZERO_FREE_EXPONENTS, 2, grid)?
        .into_iter()
        .map(|sides| {
            let p = sides.p;
            let (f0_p, f1_p) = (f0.powf(p), f1.powf(p));
            let c_required = ((sides.norm_p - f0_p - f1_p) / sides.area).max(0.0);
            let c_scaling = (sides.norm_p - f0_p) / sides.area;
            ZeroFreeRow { p, norm_p: sides.norm_p, area: sides.area, f0_p, f1_p, c_required, c_scaling }
        })
        .collect();
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.c_scaling > 0.0 && r.area > 0.0)
        .map(|r| (r.p.ln(), r.c_scaling.ln()))
        .collect();
    Ok(ZeroFreeReport { log_bloch, rows, fitted_exponent: slope(&pts) })
}

/// Least-squares slope; NaN for fewer than two points.
fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Profile and `μ_A`-integral for one solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionProfile {
    /// `(f(0), f'(0))`, real.
    pub initial: [f64; 2],
    /// `(r, M_p(r, f))` on [`PROFILE_RADII`].
    pub means: Vec<(f64, f64)>,
    /// `∫ |f|^p dμ_A` over `|z| ≤ r_max`.
    pub mu_integral: NormEstimate,
    /// The recurrence overflowed before the requested order.
    pub overflow: bool,
}

/// Quantities entering the `H^p` characterization of solutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpMembershipReport {
    pub p: f64,
    pub bmoa_dd: ConditionReport,
    /// Carleson norm of `dμ_A = |A|² (1-|z|²)³ dm`.
    pub carleson: NormEstimate,
    pub solutions: Vec<SolutionProfile>,
}

/// Solves `f'' + A f = 0` for the fundamental initial data `(1, 0)` and
/// `(0, 1)` to order `order`, and reports the four quantities of the
/// characterization side by side.
pub fn hp_membership_experiment(
    a: &PowerSeries,
    p: f64,
    order: usize,
    grid: &QuadratureGrid,
) -> Result<HpMembershipReport> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("exponent p = {p} must be positive")));
    }
    let n = order.max(2);
    let a_n = a.truncate(n).with_order(n);
    let density = |z: Complex64| a_n.eval_unchecked(z).norm_sqr() * (1.0 - z.norm_sqr()).powi(3);
    let carleson = carleson_norm(density, grid);
    let mut solutions = Vec::new();
    for init in [[1.0, 0.0], [0.0, 1.0]] {
        let problem = OdeProblem::new(
            vec![a_n.clone(), PowerSeries::zero(n)],
            vec![Complex64::new(init[0], 0.0), Complex64::new(init[1], 0.0)],
            n,
        )?;
        let sol = solve_series(&problem);
        let f = &sol.series;
        let means = PROFILE_RADII
            .iter()
            .map(|&r| (r, mean_p(f, r, p, angular_count_at(grid, r)).powf(1.0 / p)))
            .collect();
        let mu_integral = estimate(grid, |g| {
            let fv = g.sample(f);
            let pts = g.points();
            let vals: Vec<f64> = pts
                .iter()
                .zip(&fv)
                .map(|(&z, v)| v.norm().powf(p) * density(z))
                .collect();
            g.integrate(&vals)
        });
        solutions.push(SolutionProfile { initial: init, means, mu_integral, overflow: sol.overflow });
    }
    Ok(HpMembershipReport { p, bmoa_dd: bmoa_dd(a, grid), carleson, solutions })
}
