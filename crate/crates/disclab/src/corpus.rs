//! Series specifications addressed by strings, and the test-function corpus.
//!
//! Spec strings:
//! - `poly:c0,c1,…` with real or complex entries (`0.5`, `1-2i`);
//! - `exp:eps=ε` for `exp(εz)`;
//! - `geometric:w=w` for `1/(1-wz)`;
//! - `binomial:a=a,s=s` for `(1-az)^s`;
//! - `koebe` for `z/(1-z)²`;
//! - `lacunary:base=b,decay=d` for `Σ_k d^k z^{b^k}`;
//! - `log-damped-pole` for `(1-z)^{-2} (log(e/(1-z)))^{-1}`;
//! - a named equation tag (`hille:gamma=1.0`, `exp-singular`, `constant:c=0.25`) for its coefficient;
//! - `solution:<named tag>` for its closed-form solution.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conditions::log_damped_double_pole;
use crate::error::{Error, Result};
use crate::ode::NamedExample;
use crate::series::PowerSeries;

/// A series described by a stable string.
#[derive(Debug, Clone, PartialEq)]
pub enum SeriesSpec {
    Polynomial(Vec<Complex64>),
    Exp { eps: f64 },
    Geometric { w: f64 },
    Binomial { a: f64, s: f64 },
    Koebe,
    Lacunary { base: u64, decay: f64 },
    LogDampedPole,
    Coefficient(NamedExample),
    Solution(NamedExample),
}

fn params<'a>(s: &'a str, rest: &'a str, keys: &[&str]) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("expected parameters {keys:?} in {s:?}"));
    let pairs: Vec<(&str, &str)> = rest
        .split(',')
        .map(|kv| kv.split_once('=').ok_or_else(bad))
        .collect::<Result<_>>()?;
    if pairs.len() != keys.len() {
        return Err(bad());
    }
    keys.iter()
        .zip(&pairs)
        .map(|(k, (name, v))| {
            if name.trim() != *k {
                return Err(bad());
            }
            v.trim().parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(bad)
        })
        .collect()
}

impl FromStr for SeriesSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(rest) = s.strip_prefix("solution:") {
            return Ok(SeriesSpec::Solution(rest.parse()?));
        }
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        match head {
            "poly" => {
                let coeffs: Vec<Complex64> = rest
                    .split(',')
                    .map(|c| c.trim().parse::<Complex64>().map_err(|_| Error::Config(format!("bad coefficient {c:?}"))))
                    .collect::<Result<_>>()?;
                if coeffs.is_empty() || coeffs.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
                    return Err(Error::Config(format!("bad polynomial {s:?}")));
                }
                Ok(SeriesSpec::Polynomial(coeffs))
            }
            "exp" => Ok(SeriesSpec::Exp { eps: params(s, rest, &["eps"])?[0] }),
            "geometric" => {
                let w = params(s, rest, &["w"])?[0];
                if !(w.abs() < 1.0) {
                    return Err(Error::Config(format!("geometric ratio must lie in (-1, 1): {s:?}")));
                }
                Ok(SeriesSpec::Geometric { w })
            }
            "binomial" => {
                let v = params(s, rest, &["a", "s"])?;
                if !(v[0].abs() <= 1.0) {
                    return Err(Error::Config(format!("binomial centre must satisfy |a| ≤ 1: {s:?}")));
                }
                Ok(SeriesSpec::Binomial { a: v[0], s: v[1] })
            }
            "koebe" if rest.is_empty() => Ok(SeriesSpec::Koebe),
            "lacunary" => {
                let v = params(s, rest, &["base", "decay"])?;
                if !(v[0] >= 2.0 && v[0].fract() == 0.0) {
                    return Err(Error::Config(format!("lacunary base must be an integer ≥ 2: {s:?}")));
                }
                Ok(SeriesSpec::Lacunary { base: v[0] as u64, decay: v[1] })
            }
            "log-damped-pole" if rest.is_empty() => Ok(SeriesSpec::LogDampedPole),
            _ => Ok(SeriesSpec::Coefficient(s.parse()?)),
        }
    }
}

impl fmt::Display for SeriesSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeriesSpec::Polynomial(c) => {
                let parts: Vec<String> = c
                    .iter()
                    .map(|z| if z.im == 0.0 { format!("{:?}", z.re) } else { format!("{:?}{:+?}i", z.re, z.im) })
                    .collect();
                write!(f, "poly:{}", parts.join(","))
            }
            SeriesSpec::Exp { eps } => write!(f, "exp:eps={eps:?}"),
            SeriesSpec::Geometric { w } => write!(f, "geometric:w={w:?}"),
            SeriesSpec::Binomial { a, s } => write!(f, "binomial:a={a:?},s={s:?}"),
            SeriesSpec::Koebe => write!(f, "koebe"),
            SeriesSpec::Lacunary { base, decay } => write!(f, "lacunary:base={base},decay={decay:?}"),
            SeriesSpec::LogDampedPole => write!(f, "log-damped-pole"),
            SeriesSpec::Coefficient(e) => write!(f, "{e}"),
            SeriesSpec::Solution(e) => write!(f, "solution:{e}"),
        }
    }
}

impl Serialize for SeriesSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SeriesSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

impl SeriesSpec {
    /// Taylor expansion to order `n`. Polynomials keep their degree when it
    /// exceeds `n`.
    pub fn series(&self, n: usize) -> PowerSeries {
        match self {
            SeriesSpec::Polynomial(c) => PowerSeries::new(c.clone()).with_order(n.max(c.len() - 1)),
            SeriesSpec::Exp { eps } => {
                let mut t = 1.0;
                PowerSeries::from_fn(n, |k| {
                    if k > 0 {
                        t *= eps / k as f64;
                    }
                    re(t)
                })
            }
            SeriesSpec::Geometric { w } => PowerSeries::geometric(re(*w), n),
            SeriesSpec::Binomial { a, s } => {
                let mut t = 1.0;
                PowerSeries::from_fn(n, |k| {
                    if k > 0 {
                        t *= (k as f64 - 1.0 - s) * a / k as f64;
                    }
                    re(t)
                })
            }
            SeriesSpec::Koebe => PowerSeries::from_fn(n, |k| re(k as f64)),
            SeriesSpec::Lacunary { base, decay } => {
                let mut out = PowerSeries::zero(n).coeffs().to_vec();
                let (mut freq, mut amp) = (1u64, 1.0);
                while (freq as usize) <= n {
                    out[freq as usize] = re(amp);
                    freq = freq.saturating_mul(*base);
                    amp *= decay;
                }
                PowerSeries::new(out)
            }
            SeriesSpec::LogDampedPole => log_damped_double_pole(n),
            SeriesSpec::Coefficient(e) => e.coefficient(n),
            SeriesSpec::Solution(e) => e.reference(n),
        }
    }
}

/// Structural properties a corpus function is known to have.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusTag {
    ZeroFree,
    LocUniv,
    Lacunary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub name: String,
    pub spec: SeriesSpec,
    #[serde(default)]
    pub tags: Vec<CorpusTag>,
}

/// JSON manifest: `{"entries": [{"name", "spec", "tags"}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub entries: Vec<CorpusEntry>,
}

/// Random polynomials in the default corpus.
pub const RANDOM_POLYNOMIALS: usize = 12;

impl Corpus {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("corpus manifest: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Thirty functions holomorphic across the closed disc: closed forms plus
    /// seeded random polynomials of degree at most 8 with coefficients in the
    /// unit ball.
    pub fn default_with_seed(seed: u64) -> Self {
        use CorpusTag::*;
        let mut entries = Vec::new();
        let mut push = |name: &str, spec: &str, tags: &[CorpusTag]| {
            entries.push(CorpusEntry {
                name: name.to_string(),
                spec: spec.parse().expect("built-in spec parses"),
                tags: tags.to_vec(),
            })
        };
        push("one", "poly:1", &[ZeroFree]);
        push("identity", "poly:0,1", &[LocUniv]);
        push("affine", "poly:0.5,0.5", &[ZeroFree, LocUniv]);
        push("z5", "poly:0,0,0,0,0,1", &[]);
        push("quadratic", "poly:1,0,0.25", &[ZeroFree]);
        push("cubic", "poly:0.2,1,-0.3,0.1", &[]);
        push("exp-0.1", "exp:eps=0.1", &[ZeroFree, LocUniv]);
        push("exp-0.5", "exp:eps=0.5", &[ZeroFree, LocUniv]);
        push("exp-1", "exp:eps=1.0", &[ZeroFree, LocUniv]);
        push("geometric-0.3", "geometric:w=0.3", &[ZeroFree, LocUniv]);
        push("geometric-0.6", "geometric:w=0.6", &[ZeroFree, LocUniv]);
        push("quarter-root", "binomial:a=0.5,s=0.25", &[ZeroFree, LocUniv]);
        push("inverse-root", "binomial:a=0.8,s=-0.5", &[ZeroFree, LocUniv]);
        push("square", "binomial:a=0.4,s=2.0", &[ZeroFree]);
        push("lacunary-2", "lacunary:base=2,decay=0.5", &[Lacunary]);
        push("lacunary-3", "lacunary:base=3,decay=0.3", &[Lacunary]);
        push("constant-solution", "solution:constant:c=0.25", &[]);
        push("shifted-cube", "poly:0,0,0,1,0.5", &[]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..RANDOM_POLYNOMIALS {
            let degree = rng.gen_range(1..=8);
            let coeffs: Vec<Complex64> = (0..=degree).map(|_| random_in_ball(&mut rng)).collect();
            entries.push(CorpusEntry {
                name: format!("random-{i}"),
                spec: SeriesSpec::Polynomial(coeffs),
                tags: Vec::new(),
            });
        }
        Corpus { entries }
    }
}

impl Default for Corpus {
    fn default() -> Self {
        Self::default_with_seed(DEFAULT_SEED)
    }
}

pub const DEFAULT_SEED: u64 = 20_170_401;

/// Uniform point of the closed unit disc.
pub fn random_in_ball(rng: &mut impl Rng) -> Complex64 {
    let r = rng.gen::<f64>().sqrt();
    let t = rng.gen::<f64>() * std::f64::consts::TAU;
    Complex64::from_polar(r, t)
}

/// `Π (1 - z/z_k)` for `degree` random roots with `1 ≤ |z_k| ≤ 3`; zero-free
/// in the open disc and normalized by `f(0) = 1`.
pub fn random_outer_root_polynomial(rng: &mut impl Rng, degree: usize) -> PowerSeries {
    let mut f = PowerSeries::constant(Complex64::new(1.0, 0.0), degree);
    for _ in 0..degree {
        let root = Complex64::from_polar(rng.gen_range(1.0..=3.0), rng.gen::<f64>() * std::f64::consts::TAU);
        f = f.mul(&PowerSeries::new(vec![Complex64::new(1.0, 0.0), -root.inv()]).with_order(degree));
    }
    f
}
