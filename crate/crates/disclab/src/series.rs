//! Truncated Taylor series on the unit disc.
//!
//! A [`PowerSeries`] stores `c_0..c_N` and is the only representation of an
//! analytic function used in the crate. Binary operations truncate to the
//! smaller order so that unknown coefficients are never invented.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default truncation order.
pub const DEFAULT_ORDER: usize = 256;

/// Magnitudes below this are stored as exact zeros.
pub const FLUSH_BELOW: f64 = 1e-300;

/// Relative size of the trailing coefficients above which a composition is
/// reported as inaccurate.
pub const COMPOSE_TAIL_TOL: f64 = 1e-8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn flush(c: Complex64) -> Complex64 {
    if c.norm() < FLUSH_BELOW {
        ZERO
    } else {
        c
    }
}

/// Truncated power series `Σ_{n≤N} c_n z^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Complex64>", into = "Vec<Complex64>")]
pub struct PowerSeries {
    coeffs: Vec<Complex64>,
}

impl TryFrom<Vec<Complex64>> for PowerSeries {
    type Error = Error;

    fn try_from(coeffs: Vec<Complex64>) -> Result<Self> {
        PowerSeries::try_new(coeffs)
    }
}

impl From<PowerSeries> for Vec<Complex64> {
    fn from(f: PowerSeries) -> Self {
        f.coeffs
    }
}

impl PowerSeries {
    /// Builds a series from its coefficients, rejecting non-finite values.
    /// An empty vector is read as the zero series of order 0.
    pub fn try_new(coeffs: Vec<Complex64>) -> Result<Self> {
        if let Some(n) = coeffs.iter().position(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidArgument(format!("coefficient {n} is not finite")));
        }
        let mut coeffs: Vec<Complex64> = coeffs.into_iter().map(flush).collect();
        if coeffs.is_empty() {
            coeffs.push(ZERO);
        }
        Ok(PowerSeries { coeffs })
    }

    /// Builds a series from its coefficients.
    ///
    /// # Panics
    /// Panics if a coefficient is NaN or infinite.
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self::try_new(coeffs).expect("power series coefficients must be finite")
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zero(order: usize) -> Self {
        PowerSeries { coeffs: vec![ZERO; order + 1] }
    }

    pub fn constant(c: Complex64, order: usize) -> Self {
        let mut f = Self::zero(order);
        f.coeffs[0] = flush(c);
        f
    }

    /// `z^k` carried at the given order (the zero series if `k > order`).
    pub fn monomial(k: usize, order: usize) -> Self {
        let mut f = Self::zero(order);
        if k <= order {
            f.coeffs[k] = Complex64::new(1.0, 0.0);
        }
        f
    }

    /// Coefficients `w^n`, the expansion of `1/(1 - w z)`.
    pub fn geometric(w: Complex64, order: usize) -> Self {
        let mut coeffs = Vec::with_capacity(order + 1);
        let mut p = Complex64::new(1.0, 0.0);
        for _ in 0..=order {
            coeffs.push(p);
            p *= w;
        }
        Self::new(coeffs)
    }

    /// Coefficients of `(1 - w z)^{-k}`, `C(n+k-1, k-1) w^n`.
    pub fn negative_binomial(w: Complex64, k: u32, order: usize) -> Self {
        let mut coeffs = Vec::with_capacity(order + 1);
        let mut c = Complex64::new(1.0, 0.0);
        for n in 0..=order {
            coeffs.push(c);
            c *= w * ((n + k as usize) as f64 / (n + 1) as f64);
        }
        Self::new(coeffs)
    }

    /// Builds a series from a coefficient formula.
    pub fn from_fn(order: usize, f: impl FnMut(usize) -> Complex64) -> Self {
        Self::new((0..=order).map(f).collect())
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient `c_n`, zero beyond the truncation order.
    pub fn coeff(&self, n: usize) -> Complex64 {
        self.coeffs.get(n).copied().unwrap_or(ZERO)
    }

    /// Keeps `c_0..c_order`.
    pub fn truncate(&self, order: usize) -> Self {
        let n = order.min(self.order());
        PowerSeries { coeffs: self.coeffs[..=n].to_vec() }
    }

    /// Re-declares the truncation order, padding with zeros. Only meaningful
    /// when the higher coefficients are known to vanish (polynomials).
    pub fn with_order(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order + 1, ZERO);
        PowerSeries { coeffs }
    }

    /// Horner evaluation without the disc check.
    pub fn eval_unchecked(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(ZERO, |acc, &c| acc * z + c)
    }

    /// Evaluates the series at `z`, requiring `|z| < 1`.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let m = z.norm();
        if !(m < 1.0) {
            return Err(Error::OutsideDisc { modulus: m });
        }
        Ok(self.eval_unchecked(z))
    }

    /// `f'` of order `N-1` (order 0 when `N = 0`).
    pub fn derivative(&self) -> Self {
        if self.order() == 0 {
            return Self::zero(0);
        }
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(n, &c)| c * n as f64)
                .collect(),
        )
    }

    /// `k`-th derivative.
    pub fn nth_derivative(&self, k: usize) -> Self {
        (0..k).fold(self.clone(), |f, _| f.derivative())
    }

    /// `c0 + ∫_0^z f`, of order `N+1`.
    pub fn antiderivative(&self, c0: Complex64) -> Self {
        let mut coeffs = Vec::with_capacity(self.coeffs.len() + 1);
        coeffs.push(c0);
        coeffs.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(n, &c)| c / (n + 1) as f64),
        );
        Self::new(coeffs)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// `f(w z)`; used for dilations and rotations.
    pub fn dilate(&self, w: Complex64) -> Self {
        let mut p = Complex64::new(1.0, 0.0);
        Self::new(
            self.coeffs
                .iter()
                .map(|&c| {
                    let v = c * p;
                    p *= w;
                    v
                })
                .collect(),
        )
    }

    /// Multiplies by `z^k`, keeping the order (the top `k` coefficients drop).
    pub fn shift_up(&self, k: usize) -> Self {
        let n = self.order();
        Self::from_fn(n, |i| if i >= k { self.coeff(i - k) } else { ZERO })
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        Self::from_fn(n, |i| self.coeffs[i] + other.coeffs[i])
    }

    pub fn sub(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        Self::from_fn(n, |i| self.coeffs[i] - other.coeffs[i])
    }

    /// Cauchy product truncated to the smaller order.
    pub fn mul(&self, other: &Self) -> Self {
        let n = self.order().min(other.order());
        Self::from_fn(n, |k| {
            (0..=k).fold(ZERO, |acc, j| acc + self.coeffs[j] * other.coeffs[k - j])
        })
    }

    /// `exp(f)` through the recurrence `n e_n = Σ_{k=1}^n k f_k e_{n-k}`.
    pub fn exp(&self) -> Self {
        let n = self.order();
        let mut e = vec![ZERO; n + 1];
        e[0] = self.coeffs[0].exp();
        for m in 1..=n {
            let s = (1..=m).fold(ZERO, |acc, k| acc + self.coeffs[k] * e[m - k] * k as f64);
            e[m] = s / m as f64;
        }
        Self::new(e)
    }

    /// `1/f`, requiring `f(0) ≠ 0`.
    pub fn recip(&self) -> Result<Self> {
        let c0 = self.coeffs[0];
        if c0.norm() == 0.0 {
            return Err(Error::InvalidArgument("reciprocal of a series vanishing at 0".into()));
        }
        let n = self.order();
        let mut q = vec![ZERO; n + 1];
        q[0] = 1.0 / c0;
        for m in 1..=n {
            let s = (1..=m).fold(ZERO, |acc, k| acc + self.coeffs[k] * q[m - k]);
            q[m] = -s / c0;
        }
        Self::try_new(q)
    }

    /// `max |c_n|`.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Values `f(r e^{2πij/M})`, `j = 0..M-1`.
    pub fn sample_circle(&self, r: f64, m: usize) -> Vec<Complex64> {
        assert!(m >= 1, "sample_circle needs at least one node");
        let mut buf = vec![ZERO; m];
        let mut p = 1.0;
        for (n, &c) in self.coeffs.iter().enumerate() {
            buf[n % m] += c * p;
            p *= r;
        }
        PLANNER.with(|pl| pl.borrow_mut().plan_fft_inverse(m).process(&mut buf));
        buf
    }

    /// Default re-expansion radius used by [`compose_moebius`](Self::compose_moebius).
    ///
    /// The base radius `0.95(1-|a|)/(1+|a|)` is raised to `10^{-1/N}` when
    /// smaller, so that unscaling by `ρ^{-n}` amplifies rounding by at most
    /// a factor 10 over the whole truncation range.
    pub fn default_compose_radius(a: Complex64, order: usize) -> f64 {
        let m = a.norm();
        let base = 0.95 * (1.0 - m) / (1.0 + m);
        if order == 0 {
            return base;
        }
        base.max(10f64.powf(-1.0 / order as f64))
    }

    /// Taylor coefficients of `f∘φ_a` with `φ_a(z) = (a-z)/(1-āz)`, using
    /// `m ≥ 2N+2` samples on the default radius.
    pub fn compose_moebius(&self, a: Complex64, m: usize) -> Result<Composition> {
        let rho = Self::default_compose_radius(a, self.order());
        self.compose_moebius_at(a, m, rho)
    }

    /// As [`compose_moebius`](Self::compose_moebius) with an explicit sampling radius.
    pub fn compose_moebius_at(&self, a: Complex64, m: usize, rho: f64) -> Result<Composition> {
        let n = self.order();
        if !(a.norm() < 1.0) {
            return Err(Error::OutsideDisc { modulus: a.norm() });
        }
        if m < 2 * n + 2 {
            return Err(Error::InvalidArgument(format!(
                "composition needs at least {} nodes, got {m}",
                2 * n + 2
            )));
        }
        if !(rho > 0.0 && rho < 1.0) {
            return Err(Error::InvalidArgument(format!("sampling radius {rho} not in (0,1)")));
        }
        let mut buf: Vec<Complex64> = (0..m)
            .map(|j| {
                let z = Complex64::from_polar(rho, 2.0 * PI * j as f64 / m as f64);
                self.eval_unchecked(crate::geometry::moebius(a, z))
            })
            .collect();
        PLANNER.with(|pl| pl.borrow_mut().plan_fft_forward(m).process(&mut buf));
        let mut scale = 1.0 / m as f64;
        let mut coeffs = Vec::with_capacity(n + 1);
        for c in buf.iter().take(n + 1) {
            coeffs.push(*c * scale);
            scale /= rho;
        }
        let series = PowerSeries::try_new(coeffs)?;
        let peak = series.max_abs();
        let tail_start = n - n / 8;
        let trailing = series.coeffs[tail_start..]
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        let relative_tail = if peak > 0.0 { trailing / peak } else { 0.0 };
        Ok(Composition {
            series,
            radius: rho,
            relative_tail,
            accuracy_loss: n > 0 && relative_tail > COMPOSE_TAIL_TOL,
        })
    }
}

/// Result of a Möbius re-expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct Composition {
    pub series: PowerSeries,
    /// Sampling radius used.
    pub radius: f64,
    /// Largest trailing coefficient relative to the largest coefficient.
    pub relative_tail: f64,
    /// Set when the trailing coefficients exceed [`COMPOSE_TAIL_TOL`].
    pub accuracy_loss: bool,
}

impl Add for &PowerSeries {
    type Output = PowerSeries;
    fn add(self, rhs: Self) -> PowerSeries {
        PowerSeries::add(self, rhs)
    }
}

impl Sub for &PowerSeries {
    type Output = PowerSeries;
    fn sub(self, rhs: Self) -> PowerSeries {
        PowerSeries::sub(self, rhs)
    }
}

impl Mul for &PowerSeries {
    type Output = PowerSeries;
    fn mul(self, rhs: Self) -> PowerSeries {
        PowerSeries::mul(self, rhs)
    }
}

impl Neg for &PowerSeries {
    type Output = PowerSeries;
    fn neg(self) -> PowerSeries {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}
