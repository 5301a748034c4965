//! Radial weights on the disc, their derived weights and moments, truncated
//! reproducing kernels of weighted Bergman spaces, and the kernel quantity
//! controlling Bloch growth of solutions of `f'' + A f = 0`.
//!
//! For a radial weight `ω` the derived weights are
//! `ω̂(r) = ∫_r^1 ω`, `ω̃(r) = 2∫_r^1 ω(s) s ds` and
//! `ω★(r) = ∫_r^1 log(s/r) ω(s) s ds`; moments are `ω_x = ∫_0^1 r^x ω(r) dr`.

use std::path::Path;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::{ConditionKind, ConditionReport};
use crate::error::{Error, Result};
use crate::norms::{bloch_norm, growth_sup, try_estimate, NormEstimate, QuadratureGrid};
use crate::ode::{solve_series, OdeProblem};
use crate::series::PowerSeries;

/// Tolerance on `2ω₁ = 1` for a weight to count as normalized.
pub const NORMALIZED_TOL: f64 = 1e-10;
/// Relative size of the extrapolated kernel tail that flags accuracy loss.
pub const KERNEL_TAIL_TOL: f64 = 0.01;
/// Terms used for the geometric tail extrapolation.
pub const KERNEL_TAIL_TERMS: usize = 10;
/// Constant in the pointwise growth margin.
pub const GROWTH_CONSTANT: f64 = 4.0;

const PANEL_NODES: usize = 16;
/// Number of dyadic panels towards a singular endpoint.
const GRADED_LEVELS: i32 = 60;
/// Pieces are split so that `x · width ≤ MOMENT_SPREAD` when integrating `r^x`.
const MOMENT_SPREAD: f64 = 8.0;

fn panel_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| crate::norms::gauss_legendre(PANEL_NODES))
}

/// Gauss–Legendre sum of `g` over each consecutive pair of `breaks`.
fn composite(breaks: &[f64], g: impl Fn(f64) -> f64) -> f64 {
    let rule = panel_rule();
    breaks
        .windows(2)
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            let half = 0.5 * (hi - lo);
            rule.iter().map(|&(x, wt)| wt * g(lo + half * (x + 1.0))).sum::<f64>() * half
        })
        .sum()
}

/// Dyadic breakpoints `a + (b-a)(1 - 2^{-j})` accumulating at `b`.
fn graded_to_right(a: f64, b: f64) -> Vec<f64> {
    let mut out: Vec<f64> = (0..GRADED_LEVELS).map(|j| b - (b - a) * 0.5f64.powi(j)).collect();
    out.push(b);
    out
}

/// Dyadic breakpoints `a + (b-a) 2^{-j}` accumulating at `a`.
fn graded_to_left(a: f64, b: f64) -> Vec<f64> {
    let mut out: Vec<f64> = (0..GRADED_LEVELS).map(|j| a + (b - a) * 0.5f64.powi(j)).collect();
    out.push(a);
    out.reverse();
    out
}

/// Sorted union of breakpoint sets restricted to `[a, b]`.
fn merge_breaks(a: f64, b: f64, sets: &[&[f64]]) -> Vec<f64> {
    let mut v: Vec<f64> = sets
        .iter()
        .flat_map(|s| s.iter().copied())
        .filter(|&x| x > a && x < b)
        .collect();
    v.push(a);
    v.push(b);
    v.sort_by(f64::total_cmp);
    v.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * y.abs().max(1e-300));
    v
}

/// Splits pieces so that `spread · width ≤ MOMENT_SPREAD`.
fn subdivide(breaks: &[f64], spread: f64) -> Vec<f64> {
    let mut out = vec![breaks[0]];
    for w in breaks.windows(2) {
        let k = ((spread * (w[1] - w[0]) / MOMENT_SPREAD).ceil() as usize).max(1);
        for i in 1..=k {
            out.push(w[0] + (w[1] - w[0]) * i as f64 / k as f64);
        }
    }
    out
}

/// Shape of a radial weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum WeightProfile {
    /// `(α+1)(1-r²)^α`.
    Standard { alpha: f64 },
    /// Piecewise linear interpolation of samples on `0 = r_0 < … < r_K = 1`.
    Tabulated { radii: Vec<f64>, values: Vec<f64> },
    /// `ω̃` of the inner weight, evaluated by quadrature.
    Tilde { inner: Box<RadialWeight> },
}

/// A radial weight `scale · profile`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialWeight {
    profile: WeightProfile,
    scale: f64,
}

impl RadialWeight {
    pub fn standard(alpha: f64) -> Result<Self> {
        if !(alpha > -1.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("standard weight needs alpha > -1, got {alpha}")));
        }
        Ok(RadialWeight { profile: WeightProfile::Standard { alpha }, scale: 1.0 })
    }

    /// Samples `values[i] = ω(radii[i])`; radii must run strictly from 0 to 1.
    pub fn tabulated(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() < 2 || radii.len() != values.len() {
            return Err(Error::InvalidArgument("table needs at least two (r, w) rows".into()));
        }
        if radii[0] != 0.0 || *radii.last().expect("nonempty") != 1.0 {
            return Err(Error::InvalidArgument("table radii must start at 0 and end at 1".into()));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("table radii must increase strictly".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument("table values must be finite and nonnegative".into()));
        }
        if values.iter().all(|&v| v == 0.0) {
            return Err(Error::InvalidArgument("table weight vanishes identically".into()));
        }
        Ok(RadialWeight { profile: WeightProfile::Tabulated { radii, values }, scale: 1.0 })
    }

    /// Reads `r w` rows separated by whitespace or a comma; `#` starts a comment.
    pub fn from_table_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let (mut radii, mut values) = (Vec::new(), Vec::new());
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Config(format!("{}:{}: bad number {s:?}", path.display(), i + 1)))
            };
            match fields.as_slice() {
                [r, w] => {
                    radii.push(parse(r)?);
                    values.push(parse(w)?);
                }
                _ => return Err(Error::Config(format!("{}:{}: expected two columns", path.display(), i + 1))),
            }
        }
        Self::tabulated(radii, values)
    }

    pub fn profile(&self) -> &WeightProfile {
        &self.profile
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn scaled(&self, c: f64) -> Self {
        RadialWeight { profile: self.profile.clone(), scale: self.scale * c }
    }

    /// The multiple with `ω₁ = 1/2`.
    pub fn normalized(&self) -> Self {
        self.scaled(0.5 / self.moment(1.0))
    }

    /// `2ω₁ = 1` within [`NORMALIZED_TOL`].
    pub fn is_normalized(&self) -> bool {
        (2.0 * self.moment(1.0) - 1.0).abs() <= NORMALIZED_TOL
    }

    /// `ω(r)`.
    pub fn density(&self, r: f64) -> f64 {
        self.scale
            * match &self.profile {
                WeightProfile::Standard { alpha } => (alpha + 1.0) * (1.0 - r * r).powf(*alpha),
                WeightProfile::Tabulated { radii, values } => {
                    let i = radii.partition_point(|&x| x <= r).clamp(1, radii.len() - 1);
                    let t = (r - radii[i - 1]) / (radii[i] - radii[i - 1]);
                    values[i - 1] + t * (values[i] - values[i - 1])
                }
                WeightProfile::Tilde { inner } => inner.wtilde(r),
            }
    }

    /// Points in `[0, 1]` where the density is not smooth, or dyadic
    /// grading towards 1 where it may be singular.
    fn breakpoints(&self) -> Vec<f64> {
        match &self.profile {
            WeightProfile::Standard { .. } => graded_to_right(0.0, 1.0),
            WeightProfile::Tabulated { radii, .. } => radii.clone(),
            WeightProfile::Tilde { inner } => inner.breakpoints(),
        }
    }

    /// `∫_a^b g(s) ω(s) ds` by composite quadrature; `extra` adds breakpoints.
    fn integrate(&self, a: f64, b: f64, extra: &[f64], spread: f64, g: impl Fn(f64) -> f64) -> f64 {
        let breaks = subdivide(&merge_breaks(a, b, &[&self.breakpoints(), extra]), spread);
        composite(&breaks, |s| g(s) * self.density(s))
    }

    /// Moment `ω_x = ∫_0^1 r^x ω(r) dr`.
    pub fn moment(&self, x: f64) -> f64 {
        match &self.profile {
            WeightProfile::Standard { alpha } => self.scale * standard_moment(*alpha, x),
            WeightProfile::Tabulated { radii, values } => {
                self.scale * linear_pieces(radii, values, 0.0, 1.0, x)
            }
            WeightProfile::Tilde { .. } => self.integrate(0.0, 1.0, &[], x, |s| s.powf(x)),
        }
    }

    /// `ω̂(r) = ∫_r^1 ω`.
    pub fn what(&self, r: f64) -> f64 {
        match &self.profile {
            WeightProfile::Tabulated { radii, values } => {
                self.scale * linear_pieces(radii, values, r, 1.0, 0.0)
            }
            _ => self.integrate(r, 1.0, &[], 0.0, |_| 1.0),
        }
    }

    /// `ω̃(r) = 2∫_r^1 ω(s) s ds`.
    pub fn wtilde(&self, r: f64) -> f64 {
        match &self.profile {
            WeightProfile::Standard { alpha } => self.scale * (1.0 - r * r).powf(alpha + 1.0),
            WeightProfile::Tabulated { radii, values } => {
                2.0 * self.scale * linear_pieces(radii, values, r, 1.0, 1.0)
            }
            WeightProfile::Tilde { .. } => 2.0 * self.integrate(r, 1.0, &[], 0.0, |s| s),
        }
    }

    /// `ω★(r) = ∫_r^1 log(s/r) ω(s) s ds` for `0 < r ≤ 1`.
    pub fn wstar(&self, r: f64) -> f64 {
        if r >= 1.0 {
            return 0.0;
        }
        // log(s/r) is analytic on [r, 1] but its singularity at 0 is only r away.
        let near: Vec<f64> = (1..64).map(|k| r * 2f64.powi(k)).take_while(|&x| x < 1.0).collect();
        self.integrate(r, 1.0, &near, 0.0, |s| (s / r).ln() * s)
    }

    /// The weight `ω̃` as a radial weight.
    pub fn tilde(&self) -> Self {
        match &self.profile {
            WeightProfile::Standard { alpha } => RadialWeight {
                profile: WeightProfile::Standard { alpha: alpha + 1.0 },
                scale: self.scale / (alpha + 2.0),
            },
            _ => RadialWeight { profile: WeightProfile::Tilde { inner: Box::new(self.clone()) }, scale: 1.0 },
        }
    }
}

impl std::str::FromStr for RadialWeight {
    type Err = Error;

    /// `standard:alpha=<α>` or `table:<path>`.
    fn from_str(s: &str) -> Result<Self> {
        if let Some(rest) = s.strip_prefix("standard:") {
            let v = rest
                .strip_prefix("alpha=")
                .ok_or_else(|| Error::Config(format!("expected standard:alpha=<value>, got {s:?}")))?;
            let alpha = v.parse().map_err(|_| Error::Config(format!("bad alpha in {s:?}")))?;
            Self::standard(alpha).map_err(|e| Error::Config(e.to_string()))
        } else if let Some(path) = s.strip_prefix("table:") {
            Self::from_table_file(Path::new(path))
        } else {
            Err(Error::Config(format!("unknown weight spec {s:?}")))
        }
    }
}

/// `∫_0^1 r^x (α+1)(1-r²)^α dr = (α+1)/2 · B((x+1)/2, α+1)`.
fn standard_moment(alpha: f64, x: f64) -> f64 {
    let m = (x - 1.0) / 2.0;
    if m >= 0.0 && m.fract() == 0.0 && m < 1e6 {
        // Odd integer x = 2n+1: ½ Π_{k≤n} k/(k+α+1).
        let n = m as usize;
        return 0.5 * (1..=n).map(|k| k as f64 / (k as f64 + alpha + 1.0)).product::<f64>();
    }
    let a = (x + 1.0) / 2.0;
    let b = alpha + 1.0;
    0.5 * (alpha + 1.0) * (libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b)).exp()
}

/// `∫_a^b s^x ds`.
fn power_integral(a: f64, b: f64, x: f64) -> f64 {
    (b.powf(x + 1.0) - a.powf(x + 1.0)) / (x + 1.0)
}

/// `∫_lo^hi L(s) s^x ds` for the piecewise linear interpolant `L`.
fn linear_pieces(radii: &[f64], values: &[f64], lo: f64, hi: f64, x: f64) -> f64 {
    let mut total = 0.0;
    for i in 1..radii.len() {
        let (r0, r1) = (radii[i - 1], radii[i]);
        let (a, b) = (r0.max(lo), r1.min(hi));
        if !(b > a) {
            continue;
        }
        let slope = (values[i] - values[i - 1]) / (r1 - r0);
        let c0 = values[i - 1] - slope * r0;
        total += c0 * power_integral(a, b, x) + slope * power_integral(a, b, x + 1.0);
    }
    total
}

/// `(α_est, β_est, C_est)` fitting
/// `C⁻¹ ((1-r)/(1-t))^α ω̂(t) ≤ ω̂(r) ≤ C ((1-r)/(1-t))^β ω̂(t)` on node pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regularity {
    pub alpha: f64,
    pub beta: f64,
    pub constant: f64,
}

/// Pairs with ratio `(1-r)/(1-t)` at least this large and `r ≥ 1/2` fix the exponents.
pub const REGULARITY_SEPARATION: f64 = 10.0;

/// Node pairs `r < t` from `{0, 1/2, 1-10^{-k}}`, `k = 1..6`.
pub fn default_regularity_pairs() -> Vec<(f64, f64)> {
    let mut nodes = vec![0.0, 0.5];
    nodes.extend((1..=6).map(|k| 1.0 - 10f64.powi(-k)));
    let mut out = Vec::new();
    for (i, &r) in nodes.iter().enumerate() {
        for &t in &nodes[i + 1..] {
            out.push((r, t));
        }
    }
    out
}

/// Exponents are the extreme log-slopes over well separated pairs near the
/// boundary; the constant is the smallest one making both bounds hold on every pair.
pub fn regularity_constants(w: &RadialWeight, pairs: &[(f64, f64)]) -> Result<Regularity> {
    let mut rows = Vec::with_capacity(pairs.len());
    for &(r, t) in pairs {
        if !(0.0 <= r && r < t && t < 1.0) {
            return Err(Error::InvalidArgument(format!("node pair ({r}, {t}) needs 0 ≤ r < t < 1")));
        }
        let (hr, ht) = (w.what(r), w.what(t));
        for (x, h) in [(r, hr), (t, ht)] {
            if !(h > 0.0) {
                return Err(Error::VanishingTail(x));
            }
        }
        rows.push(((1.0 - r) / (1.0 - t), hr / ht));
    }
    if rows.is_empty() {
        return Err(Error::InvalidArgument("no node pairs".into()));
    }
    let separated: Vec<_> = rows
        .iter()
        .zip(pairs)
        .filter(|(row, &(r, _))| row.0 >= REGULARITY_SEPARATION && r >= 0.5)
        .map(|(row, _)| row)
        .collect();
    let pool: Vec<_> = if separated.is_empty() { rows.iter().collect() } else { separated };
    let slopes = pool.iter().map(|(x, q)| q.ln() / x.ln());
    let alpha = slopes.clone().fold(f64::INFINITY, f64::min);
    let beta = slopes.fold(f64::NEG_INFINITY, f64::max);
    let constant = rows
        .iter()
        .map(|&(x, q)| (q / x.powf(beta)).max(x.powf(alpha) / q))
        .fold(1.0, f64::max);
    Ok(Regularity { alpha, beta, constant })
}

/// `1/(2ω_{2n+1})` for `n = 0..=order`.
pub fn kernel_coefficients(w: &RadialWeight, order: usize) -> Vec<f64> {
    (0..=order).map(|n| 0.5 / w.moment((2 * n + 1) as f64)).collect()
}

fn check_product(zeta: Complex64, u: Complex64) -> Result<Complex64> {
    let x = u * zeta.conj();
    if !(x.norm() < 1.0) {
        return Err(Error::OutsideDisc { modulus: x.norm() });
    }
    Ok(x)
}

/// Truncated kernel `B^ω_ζ(u) = Σ_{n≤N} (u ζ̄)^n / (2ω_{2n+1})`.
pub fn kernel_eval(w: &RadialWeight, zeta: Complex64, u: Complex64, order: usize) -> Result<Complex64> {
    let x = check_product(zeta, u)?;
    let c = kernel_coefficients(w, order);
    Ok(c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &cn| acc * x + cn))
}

/// `|∂_u B^ω_ζ(u) - ζ̄ B^{ω̃}_ζ(u)|` with both kernels truncated consistently.
pub fn kernel_derivative_residual(w: &RadialWeight, zeta: Complex64, u: Complex64, order: usize) -> Result<f64> {
    let x = check_product(zeta, u)?;
    if order == 0 {
        return Ok(0.0);
    }
    let c = kernel_coefficients(w, order);
    let deriv = (1..=order)
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, n| acc * x + c[n] * n as f64)
        * zeta.conj();
    let other = kernel_eval(&w.tilde(), zeta, u, order - 1)? * zeta.conj();
    Ok((deriv - other).norm())
}

/// Radial breakpoints graded towards both 0 and 1.
fn full_radial_breaks(w: &RadialWeight) -> Vec<f64> {
    merge_breaks(0.0, 1.0, &[&graded_to_left(0.0, 0.5), &graded_to_right(0.5, 1.0), &w.breakpoints()])
}

/// `(1/M) Σ_j f ḡ` on the circle of radius `r`.
fn circle_mean(f: &PowerSeries, g: &PowerSeries, r: f64, m: usize) -> Complex64 {
    let (a, b) = (f.sample_circle(r, m), g.sample_circle(r, m));
    a.iter().zip(&b).map(|(x, y)| x * y.conj()).sum::<Complex64>() / m as f64
}

/// `∫_0^1 h(r) 2r dr` for a complex radial profile, on `breaks`.
fn radial_complex(breaks: &[f64], h: impl Fn(f64) -> Complex64 + Sync) -> Complex64 {
    let rule = panel_rule();
    let nodes: Vec<(f64, f64)> = breaks
        .windows(2)
        .flat_map(|w| {
            let half = 0.5 * (w[1] - w[0]);
            rule.iter().map(move |&(x, wt)| (w[0] + half * (x + 1.0), half * wt))
        })
        .collect();
    let terms: Vec<Complex64> = nodes.par_iter().map(|&(r, wt)| h(r) * (2.0 * r * wt)).collect();
    terms.iter().sum()
}

/// `⟨f, g⟩_{A²_ω} = ∫_𝔻 f ḡ ω dm`. The angular mean uses the grid's
/// angle count; the radial integral runs over all of `[0, 1]` with a
/// weight-adapted composite rule.
pub fn bergman_inner(f: &PowerSeries, g: &PowerSeries, w: &RadialWeight, grid: &QuadratureGrid) -> Complex64 {
    let m = grid.angular_count();
    radial_complex(&full_radial_breaks(w), |r| circle_mean(f, g, r, m) * w.density(r))
}

/// `|⟨f, g⟩_{A²_ω} - 4⟨f', g'⟩_{A²_{ω★}} - f(0) ḡ(0)|` for a normalized weight.
pub fn green_identity_residual(f: &PowerSeries, g: &PowerSeries, w: &RadialWeight, grid: &QuadratureGrid) -> Result<f64> {
    if !w.is_normalized() {
        return Err(Error::InvalidArgument("the identity needs a normalized weight".into()));
    }
    let m = grid.angular_count();
    let lhs = bergman_inner(f, g, w, grid);
    let (df, dg) = (f.derivative(), g.derivative());
    let star = radial_complex(&full_radial_breaks(w), |r| circle_mean(&df, &dg, r, m) * w.wstar(r));
    Ok((lhs - 4.0 * star - f.coeff(0) * g.coeff(0).conj()).norm())
}

/// Outcome of the pointwise growth comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthMargin {
    /// `min [C ‖f‖ / (ω̂(r)(1-r))^{1/p} - |f(z)|]` over the outer grid annulus.
    pub margin: f64,
    /// Smallest `C` that makes the margin nonnegative on the grid.
    pub calibrated_constant: f64,
    /// `‖f‖_{A^p_ω}` on the grid.
    pub norm: f64,
}

/// Compares `|f(z)|` with `C ‖f‖_{A^p_ω} / (ω̂(z)(1-|z|))^{1/p}` for `1/2 < |z| ≤ r_max`.
pub fn pointwise_growth_margin(
    f: &PowerSeries,
    w: &RadialWeight,
    p: f64,
    c: f64,
    grid: &QuadratureGrid,
) -> Result<GrowthMargin> {
    if !(p > 0.0) {
        return Err(Error::InvalidArgument(format!("exponent p = {p} must be positive")));
    }
    let m = grid.angular_count();
    let vals = grid.sample(f);
    let dens: Vec<f64> = grid.radial_nodes().iter().map(|&(r, _)| w.density(r)).collect();
    let integrand: Vec<f64> = vals
        .iter()
        .enumerate()
        .map(|(i, v)| v.norm().powf(p) * dens[i / m])
        .collect();
    let norm = grid.integrate(&integrand).powf(1.0 / p);
    let mut margin = f64::INFINITY;
    let mut calibrated: f64 = 0.0;
    for (i, &(r, _)) in grid.radial_nodes().iter().enumerate() {
        if r <= 0.5 {
            continue;
        }
        let scale = (w.what(r) * (1.0 - r)).powf(1.0 / p);
        let peak = vals[i * m..(i + 1) * m].iter().map(|v| v.norm()).fold(0.0, f64::max);
        margin = margin.min(c * norm / scale - peak);
        if peak > 0.0 {
            calibrated = calibrated.max(peak * scale / norm);
        }
    }
    Ok(GrowthMargin { margin, calibrated_constant: calibrated, norm })
}

/// The kernel quantity with its truncation diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochKernelReport {
    pub report: ConditionReport,
    /// Largest extrapolated kernel tail relative to the value.
    pub kernel_tail: f64,
    /// `kernel_tail` exceeds [`KERNEL_TAIL_TOL`].
    pub accuracy_loss: bool,
}

/// Precomputed pieces shared by every point `z`.
struct KernelSetup {
    coeffs: Vec<f64>,
    a: PowerSeries,
    /// `(ρ, 2ρ w_ρ ω★(ρ)/(1-ρ²))` on the grid's radial nodes.
    radial: Vec<(f64, f64)>,
    /// `Σ_ρ wt_ρ ρ^m` for `m < N`.
    power_masses: Vec<f64>,
    m: usize,
}

impl KernelSetup {
    fn new(a: &PowerSeries, w: &RadialWeight, grid: &QuadratureGrid, r: Option<f64>, order: usize) -> Self {
        let a = match r {
            Some(r) => a.dilate(Complex64::new(r, 0.0)),
            None => a.clone(),
        };
        let radial: Vec<(f64, f64)> = grid
            .radial_nodes()
            .par_iter()
            .map(|&(rho, wt)| (rho, 2.0 * rho * wt * w.wstar(rho) / (1.0 - rho * rho)))
            .collect();
        let power_masses = (0..order as i32)
            .map(|m| radial.iter().map(|&(rho, wt)| wt * rho.powi(m)).sum())
            .collect();
        KernelSetup { coeffs: kernel_coefficients(w, order), a, radial, power_masses, m: grid.angular_count() }
    }

    /// `g_{n-1} = n c_n ∫_0^z ζ^n A(ζ) dζ` for `n = 1..=N`.
    fn inner_coeffs(&self, z: Complex64) -> Vec<Complex64> {
        let n_max = self.coeffs.len() - 1;
        let ak = self.a.coeffs();
        let mut zp = z; // z^{n+1}
        let mut out = Vec::with_capacity(n_max);
        for n in 1..=n_max {
            zp *= z;
            let mut s = Complex64::new(0.0, 0.0);
            let mut zk = zp;
            for (k, &c) in ak.iter().enumerate() {
                s += c * zk / (n + k + 1) as f64;
                zk *= z;
            }
            out.push(s * (n as f64 * self.coeffs[n]));
        }
        out
    }

    /// `(Q(z), extrapolated tail)` at one point.
    fn at(&self, z: Complex64) -> (f64, f64) {
        let g = self.inner_coeffs(z);
        if g.is_empty() {
            return (0.0, 0.0);
        }
        let series = PowerSeries::new(g.clone());
        let defect = 1.0 - z.norm_sqr();
        let integral: f64 = self
            .radial
            .iter()
            .map(|&(rho, wt)| {
                let mean = series.sample_circle(rho, self.m).iter().map(|v| v.norm()).sum::<f64>() / self.m as f64;
                wt * mean
            })
            .sum();
        // |Σ g_m u^m| ≤ Σ |g_m| |u|^m bounds each term's share of the u-integral.
        let terms: Vec<f64> = g.iter().zip(&self.power_masses).map(|(x, mu)| x.norm() * mu).collect();
        (defect * integral, defect * geometric_tail(&terms))
    }

    /// `(1-|z|²) |g_0| ∫ ω★/(1-|u|²) dm` on the same radial nodes.
    fn lower_at(&self, z: Complex64) -> f64 {
        let mass = self.power_masses.first().copied().unwrap_or(0.0);
        let g0 = self.inner_coeffs(z).first().copied().unwrap_or_default();
        (1.0 - z.norm_sqr()) * g0.norm() * mass
    }
}

/// Tail `Σ_{m≥N} τ_m` extrapolated geometrically from the last terms of `τ`.
fn geometric_tail(terms: &[f64]) -> f64 {
    let n = terms.len();
    if n < KERNEL_TAIL_TERMS {
        return 0.0;
    }
    let (first, last) = (terms[n - KERNEL_TAIL_TERMS], terms[n - 1]);
    if last == 0.0 {
        return 0.0;
    }
    if first == 0.0 {
        return f64::INFINITY;
    }
    let q = (last / first).powf(1.0 / (KERNEL_TAIL_TERMS - 1) as f64);
    if q >= 1.0 {
        f64::INFINITY
    } else {
        last * q / (1.0 - q)
    }
}

/// `Q(z) = (1-|z|²) ∫_𝔻 |∫_0^z conj(∂_u B^ω_ζ(u)) A(rζ) dζ| ω★(u)/(1-|u|²) dm(u)`
/// at a single point, with the kernel truncated at `order`.
pub fn bloch_kernel_at(
    a: &PowerSeries,
    w: &RadialWeight,
    z: Complex64,
    grid: &QuadratureGrid,
    r: Option<f64>,
    order: usize,
) -> f64 {
    KernelSetup::new(a, w, grid, r, order).at(z).0
}

/// Supremum of [`bloch_kernel_at`] over the grid's Möbius centers: `X_B(A)`
/// for `r = None`, the `r`-slice of `I(A, ω)` otherwise.
pub fn bloch_kernel_quantity(
    a: &PowerSeries,
    w: &RadialWeight,
    grid: &QuadratureGrid,
    r: Option<f64>,
    order: usize,
) -> Result<BlochKernelReport> {
    let run = |g: &QuadratureGrid| -> (f64, f64) {
        let setup = KernelSetup::new(a, w, g, r, order);
        g.a_grid()
            .par_iter()
            .map(|&z| setup.at(z))
            .reduce(|| (0.0, 0.0), |x, y| (x.0.max(y.0), x.1.max(y.1)))
    };
    let (value, tail) = run(grid);
    let est: NormEstimate = try_estimate(grid, |g| Ok(run(g).0))?;
    let kernel_tail = if value > 0.0 { tail / value } else if tail > 0.0 { f64::INFINITY } else { 0.0 };
    let label = match r {
        Some(r) => format!("r={r:?}"),
        None => "A".to_string(),
    };
    Ok(BlochKernelReport {
        report: ConditionReport::new(ConditionKind::BlochKernel, label, est, grid),
        kernel_tail,
        accuracy_loss: kernel_tail > KERNEL_TAIL_TOL,
    })
}

/// `sup_z (1-|z|²) |∫_0^z A(rζ) ζ dζ| · ∫ ω★/(1-|u|²) dm / (2ω₃)` on the same
/// grid; a lower bound for the kernel quantity by the triangle inequality.
pub fn bloch_kernel_lower_bound(
    a: &PowerSeries,
    w: &RadialWeight,
    grid: &QuadratureGrid,
    r: Option<f64>,
    order: usize,
) -> f64 {
    let setup = KernelSetup::new(a, w, grid, r, order.max(1));
    grid.a_grid().iter().map(|&z| setup.lower_at(z)).fold(0.0, f64::max)
}

/// Kernel quantity, predicted Bloch bound and measured Bloch norm of a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochBound {
    pub x_b: BlochKernelReport,
    pub predicted: f64,
    pub actual: f64,
}

/// Solves `f'' + A f = 0` with `f(0), f'(0) = initial` to order `order` and
/// compares `‖f‖_B` with `(|f(0)| sup (1-|z|²)|∫_0^z A| + |f'(0)|)/(1 - 4X_B)`.
pub fn bloch_solution_bound(
    a: &PowerSeries,
    w: &RadialWeight,
    initial: [Complex64; 2],
    grid: &QuadratureGrid,
    order: usize,
) -> Result<BlochBound> {
    let x_b = bloch_kernel_quantity(a, w, grid, None, order)?;
    let x = x_b.report.value;
    if !(x < 0.25) {
        return Err(Error::BoundNotApplicable { x_b: x });
    }
    let n = order.max(2);
    let coeffs = vec![a.truncate(n).with_order(n), PowerSeries::zero(n)];
    let f = solve_series(&OdeProblem::new(coeffs, initial.to_vec(), n)?).series;
    let primitive = a.antiderivative(Complex64::new(0.0, 0.0));
    let predicted = (initial[0].norm() * growth_sup(&primitive, 1.0, grid) + initial[1].norm()) / (1.0 - 4.0 * x);
    let actual = bloch_norm(&f, grid).value;
    Ok(BlochBound { x_b, predicted, actual })
}
