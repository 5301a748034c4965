//! Power-series solutions of `f^{(k)} + A_{k-1} f^{(k-1)} + … + A_0 f = 0`
//! for `k ∈ {2, 3}`, residual checks, the conformal coefficient transform,
//! and the named example equations.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::QuadratureGrid;
use crate::series::PowerSeries;

/// Coefficients above this magnitude stop the recurrence.
pub const OVERFLOW_LIMIT: f64 = 1e300;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Linear equation of order 2 or 3 with series coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeProblem {
    order: usize,
    coefficients: Vec<PowerSeries>,
    initial_values: Vec<Complex64>,
    truncation_order: usize,
}

impl OdeProblem {
    /// `coefficients[j]` multiplies `f^{(j)}`; `initial_values[j] = f^{(j)}(0)`.
    pub fn new(
        coefficients: Vec<PowerSeries>,
        initial_values: Vec<Complex64>,
        truncation_order: usize,
    ) -> Result<Self> {
        let k = coefficients.len();
        if !(k == 2 || k == 3) {
            return Err(Error::InvalidArgument(format!("equation order {k} is not 2 or 3")));
        }
        if initial_values.len() != k {
            return Err(Error::InvalidArgument(format!(
                "{} initial values for an equation of order {k}",
                initial_values.len()
            )));
        }
        if truncation_order < k {
            return Err(Error::InvalidArgument(format!(
                "truncation order {truncation_order} below equation order {k}"
            )));
        }
        if let Some(j) = coefficients.iter().position(|a| a.order() + k < truncation_order) {
            return Err(Error::InvalidArgument(format!(
                "coefficient A_{j} of order {} cannot support truncation order {truncation_order}",
                coefficients[j].order()
            )));
        }
        Ok(OdeProblem { order: k, coefficients, initial_values, truncation_order })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coefficients(&self) -> &[PowerSeries] {
        &self.coefficients
    }

    pub fn initial_values(&self) -> &[Complex64] {
        &self.initial_values
    }

    pub fn truncation_order(&self) -> usize {
        self.truncation_order
    }

    pub fn with_initial_values(&self, initial_values: Vec<Complex64>) -> Result<Self> {
        Self::new(self.coefficients.clone(), initial_values, self.truncation_order)
    }
}

/// Truncated solution and whether the recurrence overflowed.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub series: PowerSeries,
    /// The recurrence stopped early; `series` holds the coefficients computed so far.
    pub overflow: bool,
}

/// Solves by matching Taylor coefficients of `f^{(k)} = -Σ A_j f^{(j)}`.
pub fn solve_series(p: &OdeProblem) -> Solution {
    let k = p.order;
    let n = p.truncation_order;
    let mut f = vec![ZERO; n + 1];
    let mut fact = 1.0;
    for (j, v) in p.initial_values.iter().enumerate() {
        if j > 0 {
            fact *= j as f64;
        }
        f[j] = v / fact;
    }
    // d[j][m] is the m-th Taylor coefficient of f^{(j)}.
    let mut d: Vec<Vec<Complex64>> = (0..k).map(|_| vec![ZERO; n + 1]).collect();
    let rising = |m: usize, j: usize| -> f64 { (m + 1..=m + j).map(|x| x as f64).product() };
    let record = |d: &mut Vec<Vec<Complex64>>, q: usize, v: Complex64| {
        for (j, dj) in d.iter_mut().enumerate() {
            if q >= j {
                dj[q - j] = v * rising(q - j, j);
            }
        }
    };
    for q in 0..k {
        record(&mut d, q, f[q]);
    }
    let coeffs: Vec<&[Complex64]> = p.coefficients.iter().map(|a| a.coeffs()).collect();
    for m in 0..=n - k {
        let mut rhs = ZERO;
        for (j, a) in coeffs.iter().enumerate() {
            let dj = &d[j];
            let top = m.min(a.len() - 1);
            for i in 0..=top {
                rhs -= a[i] * dj[m - i];
            }
        }
        let v = rhs / rising(m, k);
        if !(v.norm() <= OVERFLOW_LIMIT) {
            f.truncate(m + k);
            return Solution { series: PowerSeries::new(f), overflow: true };
        }
        f[m + k] = v;
        record(&mut d, m + k, v);
    }
    Solution { series: PowerSeries::new(f), overflow: false }
}

/// Left-hand side `f^{(k)} + Σ A_j f^{(j)}` as a truncated series.
pub fn residual_series(f: &PowerSeries, p: &OdeProblem) -> PowerSeries {
    let derivs: Vec<PowerSeries> = (0..=p.order).map(|j| f.nth_derivative(j)).collect();
    p.coefficients
        .iter()
        .enumerate()
        .fold(derivs[p.order].clone(), |acc, (j, a)| acc.add(&a.mul(&derivs[j])))
}

/// `max |f^{(k)} + Σ A_j f^{(j)}|` over the grid points and the origin.
pub fn residual(f: &PowerSeries, p: &OdeProblem, grid: &QuadratureGrid) -> f64 {
    let r = residual_series(f, p);
    grid.sample(&r)
        .iter()
        .map(|v| v.norm())
        .fold(r.coeff(0).norm(), f64::max)
}

/// Coefficients of the equation satisfied by `f∘φ_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transformed {
    pub b0: PowerSeries,
    pub b1: PowerSeries,
    pub b2: PowerSeries,
    pub accuracy_loss: bool,
}

/// Third-order coefficients after the change of variable `z ↦ φ_a(z)`:
///
/// * `B₀ = (A₀∘φ_a) φ_a'³`
/// * `B₁ = (A₁∘φ_a) φ_a'² - (A₂∘φ_a) φ_a'' + 3(φ_a''/φ_a')² - φ_a'''/φ_a'`
/// * `B₂ = (A₂∘φ_a) φ_a' - 3 φ_a''/φ_a'`
///
/// The derivatives of `φ_a` are expanded from their closed forms in powers
/// of `1/(1-āz)`.
pub fn transform_order3(
    a0: &PowerSeries,
    a1: &PowerSeries,
    a2: &PowerSeries,
    a: Complex64,
) -> Result<Transformed> {
    let n = a0.order().min(a1.order()).min(a2.order());
    let m = 2 * n + 2;
    let c0 = a0.truncate(n).compose_moebius(a, m)?;
    let c1 = a1.truncate(n).compose_moebius(a, m)?;
    let c2 = a2.truncate(n).compose_moebius(a, m)?;
    let ab = a.conj();
    let s = re(1.0 - a.norm_sqr());
    let inv = |k: u32| PowerSeries::negative_binomial(ab, k, n);
    let d1 = inv(2).scale(-s);
    let d1_sq = inv(4).scale(s * s);
    let d1_cube = inv(6).scale(-s * s * s);
    let d2 = inv(3).scale(-2.0 * ab * s);
    let q2 = inv(1).scale(2.0 * ab);
    let q2_sq = inv(2).scale(4.0 * ab * ab);
    let q3 = inv(2).scale(6.0 * ab * ab);
    let b0 = c0.series.mul(&d1_cube);
    let b1 = c1
        .series
        .mul(&d1_sq)
        .sub(&c2.series.mul(&d2))
        .add(&q2_sq.scale(re(3.0)))
        .sub(&q3);
    let b2 = c2.series.mul(&d1).sub(&q2.scale(re(3.0)));
    Ok(Transformed {
        b0,
        b1,
        b2,
        accuracy_loss: c0.accuracy_loss || c1.accuracy_loss || c2.accuracy_loss,
    })
}

/// `h''' + 4A h' + 2A' h = 0`, solved by products of solutions of `f'' + Af = 0`.
/// Initial values are zero; set them with [`OdeProblem::with_initial_values`].
pub fn symmetric_power_problem(a: &PowerSeries) -> OdeProblem {
    let n = a.order().max(3);
    let a = a.with_order(a.order().max(3));
    let a0 = a.derivative().scale(re(2.0));
    let a1 = a.scale(re(4.0));
    let a2 = PowerSeries::zero(n);
    OdeProblem::new(vec![a0, a1, a2], vec![ZERO; 3], n).expect("orders are consistent")
}

/// Equations with known solutions, addressed by stable tags.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NamedExample {
    /// `A = (1+4γ²)/(1-z²)²`, solution `√(1-z²) sin(γ log((1+z)/(1-z)))`.
    Hille { gamma: f64 },
    /// `A = -4z/(1-z)⁴`, solution `exp(-(1+z)/(1-z))`.
    ExpSingular,
    /// `A = c`, solution `cos(√c z)`.
    Constant { c: f64 },
}

impl fmt::Display for NamedExample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedExample::Hille { gamma } => write!(f, "hille:gamma={gamma:?}"),
            NamedExample::ExpSingular => write!(f, "exp-singular"),
            NamedExample::Constant { c } => write!(f, "constant:c={c:?}"),
        }
    }
}

impl FromStr for NamedExample {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown example tag {s:?}"));
        let param = |rest: &str, key: &str| -> Result<f64> {
            rest.strip_prefix(key)
                .and_then(|v| v.strip_prefix('='))
                .and_then(|v| v.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(bad)
        };
        match s.split_once(':') {
            None if s == "exp-singular" => Ok(NamedExample::ExpSingular),
            Some(("hille", rest)) => Ok(NamedExample::Hille { gamma: param(rest, "gamma")? }),
            Some(("constant", rest)) => Ok(NamedExample::Constant { c: param(rest, "c")? }),
            _ => Err(bad()),
        }
    }
}

impl NamedExample {
    /// Coefficient `A` to order `n`.
    pub fn coefficient(&self, n: usize) -> PowerSeries {
        match *self {
            NamedExample::Hille { gamma } => {
                let k = 1.0 + 4.0 * gamma * gamma;
                PowerSeries::from_fn(n, |i| if i % 2 == 0 { re(k * (i / 2 + 1) as f64) } else { ZERO })
            }
            NamedExample::ExpSingular => PowerSeries::negative_binomial(ONE, 4, n)
                .shift_up(1)
                .scale(re(-4.0)),
            NamedExample::Constant { c } => PowerSeries::constant(re(c), n),
        }
    }

    /// `(f(0), f'(0))` of the reference solution.
    pub fn initial_values(&self) -> [Complex64; 2] {
        match *self {
            NamedExample::Hille { gamma } => [ZERO, re(2.0 * gamma)],
            NamedExample::ExpSingular => {
                let e = (-1.0f64).exp();
                [re(e), re(-2.0 * e)]
            }
            NamedExample::Constant { .. } => [ONE, ZERO],
        }
    }

    pub fn problem(&self, n: usize) -> OdeProblem {
        let a = self.coefficient(n);
        OdeProblem::new(vec![a, PowerSeries::zero(n)], self.initial_values().to_vec(), n)
            .expect("named examples are well formed")
    }

    /// Closed-form solution expanded to order `n`.
    pub fn reference(&self, n: usize) -> PowerSeries {
        match *self {
            NamedExample::Hille { gamma } => {
                let i = Complex64::new(0.0, 1.0);
                let log_ratio = PowerSeries::from_fn(n, |k| {
                    if k % 2 == 1 {
                        re(2.0 / k as f64)
                    } else {
                        ZERO
                    }
                });
                let up = log_ratio.scale(i * gamma).exp();
                let down = log_ratio.scale(-i * gamma).exp();
                let sine = up.sub(&down).scale(1.0 / (2.0 * i));
                let mut b = 1.0;
                let root = PowerSeries::from_fn(n, |k| {
                    if k % 2 == 1 {
                        return ZERO;
                    }
                    let j = k / 2;
                    if j > 0 {
                        b *= -(0.5 - (j - 1) as f64) / j as f64;
                    }
                    re(b)
                });
                root.mul(&sine)
            }
            NamedExample::ExpSingular => {
                PowerSeries::from_fn(n, |k| re(if k == 0 { -1.0 } else { -2.0 })).exp()
            }
            NamedExample::Constant { c } => {
                let w = Complex64::new(c, 0.0).sqrt();
                PowerSeries::from_fn(n, |k| cos_coeff(w, k))
            }
        }
    }

    /// Taylor series in `w` of `A(τ(w)) τ'(w)²` with `τ(w) = (a+w)/(1+aw)`,
    /// `a = tanh t`: the coefficient seen from the real point `tanh t`.
    pub fn local_coefficient(&self, t: f64, n: usize) -> PowerSeries {
        let a = t.tanh();
        match *self {
            NamedExample::Hille { .. } => self.coefficient(n),
            NamedExample::Constant { c } => {
                let sech = 1.0 / t.cosh();
                PowerSeries::negative_binomial(re(-a), 4, n).scale(re(c * sech.powi(4)))
            }
            NamedExample::ExpSingular => {
                let lead = PowerSeries::from_real(&[a, 1.0]).with_order(n);
                lead.mul(&PowerSeries::geometric(re(-a), n))
                    .mul(&PowerSeries::negative_binomial(ONE, 4, n))
                    .scale(re(-4.0 * (4.0 * t).exp()))
            }
        }
    }
}

fn cos_coeff(w: Complex64, k: usize) -> Complex64 {
    if k % 2 == 1 {
        return ZERO;
    }
    let j = k / 2;
    let fact: f64 = (1..=k).map(|x| x as f64).product();
    let sign = if j.is_multiple_of(2) { 1.0 } else { -1.0 };
    w.powu(k as u32) * (sign / fact)
}

/// A zero on the real diameter, at hyperbolic coordinate `t` (`x = tanh t`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealZero {
    pub t: f64,
    pub x: f64,
}

/// Hyperbolic step between re-expansion centers.
pub const CONTINUATION_STEP: f64 = 0.25;
/// Truncation order of each local solve.
pub const CONTINUATION_ORDER: usize = 48;

/// Zeros of the example's solution on `[0, 1)`, in increasing order.
///
/// The solution is carried along the real diameter by re-expanding at the
/// centers `tanh(j s)`: `g_j = f∘τ_j` with `τ_j(w) = (a_j + w)/(1 + a_j w)`
/// solves `g'' + (2a_j/(1 + a_j w)) g' + A(τ_j)τ_j'² g = 0`, and consecutive
/// centers differ by the hyperbolic translation `τ_{tanh s}`. Zeros are
/// bracketed on each window `[0, tanh s]` and refined by bisection, so their
/// hyperbolic coordinates stay exact even where `tanh t` rounds to 1.
pub fn real_axis_zeros(ex: &NamedExample, count: usize, t_max: f64) -> Vec<RealZero> {
    let s = CONTINUATION_STEP;
    let b = s.tanh();
    let n = CONTINUATION_ORDER;
    let [mut g0, mut g1] = ex.initial_values();
    let mut t = 0.0;
    let mut zeros = Vec::new();
    const SCAN: usize = 16;
    while zeros.len() < count && t <= t_max {
        let a = t.tanh();
        let b1 = PowerSeries::geometric(re(-a), n).scale(re(2.0 * a));
        let p = OdeProblem::new(vec![ex.local_coefficient(t, n), b1], vec![g0, g1], n)
            .expect("local problem is well formed");
        let g = solve_series(&p).series;
        let val = |w: f64| g.eval_unchecked(re(w)).re;
        let ws: Vec<f64> = (0..=SCAN).map(|i| b * i as f64 / SCAN as f64).collect();
        let vs: Vec<f64> = ws.iter().map(|&w| val(w)).collect();
        for i in 0..SCAN {
            if zeros.len() >= count {
                break;
            }
            if vs[i] == 0.0 {
                zeros.push(t + ws[i].atanh());
            } else if vs[i] * vs[i + 1] < 0.0 {
                let (mut lo, mut hi, mut flo) = (ws[i], ws[i + 1], vs[i]);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    let fm = val(mid);
                    if fm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if fm * flo < 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        flo = fm;
                    }
                }
                zeros.push(t + (0.5 * (lo + hi)).atanh());
            }
        }
        g0 = g.eval_unchecked(re(b));
        g1 = g.derivative().eval_unchecked(re(b)) * (1.0 - b * b);
        t += s;
    }
    zeros.into_iter().map(|t| RealZero { t, x: t.tanh() }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn trivial_equation_gives_identity() {
        let p = OdeProblem::new(
            vec![PowerSeries::zero(10), PowerSeries::zero(10)],
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            10,
        )
        .unwrap();
        let f = solve_series(&p);
        assert!(!f.overflow);
        assert_eq!(f.series, PowerSeries::monomial(1, 10));
        let grid = QuadratureGrid::for_order(10);
        assert_eq!(residual(&f.series, &p, &grid), 0.0);
    }

    #[test]
    fn rejects_malformed_problems() {
        let z = PowerSeries::zero(4);
        assert!(OdeProblem::new(vec![z.clone()], vec![c(0.0, 0.0)], 4).is_err());
        assert!(OdeProblem::new(vec![z.clone(), z.clone()], vec![c(0.0, 0.0)], 4).is_err());
        assert!(OdeProblem::new(vec![z.clone(), z.clone()], vec![c(0.0, 0.0); 2], 1).is_err());
        assert!(OdeProblem::new(vec![z.clone(), z], vec![c(0.0, 0.0); 2], 9).is_err());
    }

    #[test]
    fn overflow_truncates() {
        let a = PowerSeries::constant(c(-1e200, 0.0), 60);
        let p = OdeProblem::new(vec![a, PowerSeries::zero(60)], vec![c(1.0, 0.0), c(0.0, 0.0)], 60).unwrap();
        let s = solve_series(&p);
        assert!(s.overflow);
        assert!(s.series.order() < 60);
    }

    #[test]
    fn tags_round_trip() {
        for tag in ["hille:gamma=1.0", "exp-singular", "constant:c=0.25"] {
            let ex: NamedExample = tag.parse().unwrap();
            assert_eq!(ex.to_string(), tag);
        }
        assert!("hille:beta=1".parse::<NamedExample>().is_err());
        assert!("cubic".parse::<NamedExample>().is_err());
    }

    #[test]
    fn transform_at_origin_reflects() {
        let a0 = PowerSeries::from_real(&[1.0, 2.0, 3.0, 4.0]);
        let a1 = PowerSeries::from_real(&[0.5, -1.0, 0.25, 2.0]);
        let a2 = PowerSeries::from_real(&[-2.0, 0.0, 1.0, 1.0]);
        let t = transform_order3(&a0, &a1, &a2, c(0.0, 0.0)).unwrap();
        let flip = |f: &PowerSeries| f.dilate(c(-1.0, 0.0));
        for (got, want) in [(&t.b0, -&flip(&a0)), (&t.b1, flip(&a1)), (&t.b2, -&flip(&a2))] {
            for k in 0..=3 {
                assert!((got.coeff(k) - want.coeff(k)).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn symmetric_power_of_zero() {
        let p = symmetric_power_problem(&PowerSeries::zero(8))
            .with_initial_values(vec![c(1.0, 0.0), c(2.0, 0.0), c(6.0, 0.0)])
            .unwrap();
        let h = solve_series(&p).series;
        assert_eq!(h.truncate(2), PowerSeries::from_real(&[1.0, 2.0, 3.0]));
        assert!(h.coeffs()[3..].iter().all(|v| v.norm() == 0.0));
    }
}
