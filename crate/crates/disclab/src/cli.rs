//! Command-line front end: configuration, dispatch and report writing.
//!
//! Every run is described by a [`RunConfig`]. The report is canonical JSON
//! (`"schema": 1`, sorted keys, floats with 17 significant digits), so equal
//! configurations give byte-identical reports. One optional CSV table per
//! command carries the radius profiles or tracks for plotting.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::conditions::{self, ConditionKind, GridFingerprint};
use crate::corpus::{random_outer_root_polynomial, Corpus, SeriesSpec, DEFAULT_SEED};
use crate::error::{Error, Result};
use crate::geometry::{greedy_partition, max_separation_sum, separation_constants, ZeroSequence};
use crate::hardy::{self, NontangentialParams};
use crate::norms::{self, moebius_centers, QuadratureGrid, DEFAULT_A_ANGLES, DEFAULT_NODES_PER_PANEL, DEFAULT_R_MAX};
use crate::ode::{self, NamedExample, OdeProblem};
use crate::series::{PowerSeries, DEFAULT_ORDER};
use crate::weights::{self, RadialWeight, WeightProfile};

/// Version of the report layout.
pub const SCHEMA: u64 = 1;
/// Exit code for configuration errors.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code when `--strict` escalates a numerical flag.
pub const EXIT_STRICT: i32 = 3;
/// Exit code for numerical failures.
pub const EXIT_NUMERIC: i32 = 1;
/// Environment variable capping the worker threads.
pub const THREADS_VAR: &str = "DISCLAB_THREADS";

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Subcommand names, stable in the JSON config.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Solve,
    Residual,
    Zeros,
    Separation,
    Condition,
    Norm,
    Kernels,
    Identities,
    Hardy,
    Experiment,
}

/// Everything that determines a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandName,
    /// Series spec of the function under study.
    pub function: Option<String>,
    /// Coefficient specs; entry `j` multiplies `f^(j)`.
    pub coeff: Vec<String>,
    /// Named equation tag.
    pub example: Option<String>,
    /// Condition tag, norm space, identity suite or experiment name.
    pub kind: Option<String>,
    /// Initial values `f(0), f'(0), …` as complex literals.
    pub initial: Vec<String>,
    /// Points as complex literals, optionally with `:multiplicity`.
    pub points: Vec<String>,
    pub p: Vec<f64>,
    pub k: Vec<usize>,
    pub alpha: Option<f64>,
    pub q: Option<f64>,
    pub radius: Option<f64>,
    pub delta: Option<f64>,
    pub count: Option<usize>,
    /// Truncation order `N`.
    pub order: usize,
    /// Angular node count; `2N+2` when absent.
    pub angular: Option<usize>,
    pub r_max: f64,
    pub nodes_per_panel: usize,
    /// Angles per radius in the Möbius-center grid.
    pub a_angles: usize,
    /// Number of grid doublings.
    pub grid_refine: u32,
    pub weight: Option<String>,
    pub corpus: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub seed: u64,
    pub strict: bool,
}

impl RunConfig {
    pub fn new(command: CommandName) -> Self {
        RunConfig {
            command,
            function: None,
            coeff: Vec::new(),
            example: None,
            kind: None,
            initial: Vec::new(),
            points: Vec::new(),
            p: Vec::new(),
            k: Vec::new(),
            alpha: None,
            q: None,
            radius: None,
            delta: None,
            count: None,
            order: DEFAULT_ORDER,
            angular: None,
            r_max: DEFAULT_R_MAX,
            nodes_per_panel: DEFAULT_NODES_PER_PANEL,
            a_angles: DEFAULT_A_ANGLES,
            grid_refine: 0,
            weight: None,
            corpus: None,
            output: None,
            csv: None,
            seed: DEFAULT_SEED,
            strict: false,
        }
    }

    /// Canonical JSON text.
    pub fn to_canonical_json(&self) -> String {
        canonical_json(&serde_json::to_value(self).expect("config serializes"))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("run config: {e}")))
    }

    /// The working grid after `grid_refine` doublings.
    pub fn grid(&self) -> Result<QuadratureGrid> {
        if self.a_angles == 0 {
            return Err(Error::Config("a_angles must be positive".into()));
        }
        let m = self.angular.unwrap_or(2 * self.order + 2);
        let mut g = QuadratureGrid::new(self.nodes_per_panel, m, self.r_max)
            .map_err(|e| Error::Config(e.to_string()))?
            .with_a_grid(moebius_centers(self.a_angles));
        for _ in 0..self.grid_refine {
            g = g.refined();
        }
        Ok(g)
    }
}

/// Command-line options shared by all subcommands.
#[derive(Debug, Clone, Args)]
pub struct Options {
    /// Load the full run configuration from a JSON file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Series spec, e.g. `exp:eps=0.1` or `poly:1,0.5-0.25i`.
    #[arg(long)]
    pub function: Option<String>,
    /// Coefficient spec; repeat for `A0, A1, …`.
    #[arg(long, action = ArgAction::Append)]
    pub coeff: Vec<String>,
    /// Named equation, e.g. `hille:gamma=1.0`.
    #[arg(long)]
    pub example: Option<String>,
    /// Condition tag, norm space, identity suite or experiment name.
    #[arg(long, visible_aliases = ["space", "suite", "name"])]
    pub kind: Option<String>,
    /// Initial value; repeat for `f(0), f'(0), …`.
    #[arg(long, action = ArgAction::Append, allow_hyphen_values = true)]
    pub initial: Vec<String>,
    /// Point `x+yi`, optionally `x+yi:m` with multiplicity; repeatable.
    #[arg(long = "point", action = ArgAction::Append, allow_hyphen_values = true)]
    pub points: Vec<String>,
    /// Exponent; repeatable.
    #[arg(long, action = ArgAction::Append)]
    pub p: Vec<f64>,
    /// Derivative order; repeatable.
    #[arg(long, action = ArgAction::Append)]
    pub k: Vec<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub count: Option<usize>,
    /// Truncation order.
    #[arg(long, default_value_t = DEFAULT_ORDER)]
    pub order: usize,
    /// Angular node count (default `2N+2`).
    #[arg(long)]
    pub angular: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_R_MAX)]
    pub r_max: f64,
    #[arg(long, default_value_t = DEFAULT_NODES_PER_PANEL)]
    pub nodes_per_panel: usize,
    /// Angles per radius of the Möbius-center grid.
    #[arg(long, default_value_t = DEFAULT_A_ANGLES)]
    pub a_angles: usize,
    /// Double the grid resolution; repeatable.
    #[arg(long, action = ArgAction::Count)]
    pub grid_refine: u8,
    /// Weight spec: `standard:alpha=1` or `table:<path>`.
    #[arg(long)]
    pub weight: Option<String>,
    /// Corpus manifest JSON.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Report path (stdout when absent).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// CSV table path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Exit with code 3 if any divergence, accuracy or overflow flag is set.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Solve a linear equation by power series.
    Solve(Options),
    /// Residual of the series solution on the grid.
    Residual(Options),
    /// Zeros of a named example on the real diameter.
    Zeros(Options),
    /// Separation constants and greedy partition of a point sequence.
    Separation(Options),
    /// A coefficient condition.
    Condition(Options),
    /// A function-space norm estimate.
    Norm(Options),
    /// Reproducing kernel of a radial weight.
    Kernels(Options),
    /// Residuals of an identity suite.
    Identities(Options),
    /// Hardy-space quantities of a function.
    Hardy(Options),
    /// A named experiment.
    Experiment(Options),
}

#[derive(Debug, Clone, Parser)]
#[command(name = "disclab", version, about = "Power-series laboratory on the unit disc")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

impl Command {
    fn split(self) -> (CommandName, Options) {
        match self {
            Command::Solve(o) => (CommandName::Solve, o),
            Command::Residual(o) => (CommandName::Residual, o),
            Command::Zeros(o) => (CommandName::Zeros, o),
            Command::Separation(o) => (CommandName::Separation, o),
            Command::Condition(o) => (CommandName::Condition, o),
            Command::Norm(o) => (CommandName::Norm, o),
            Command::Kernels(o) => (CommandName::Kernels, o),
            Command::Identities(o) => (CommandName::Identities, o),
            Command::Hardy(o) => (CommandName::Hardy, o),
            Command::Experiment(o) => (CommandName::Experiment, o),
        }
    }
}

impl TryFrom<Cli> for RunConfig {
    type Error = Error;

    fn try_from(cli: Cli) -> Result<Self> {
        let (command, o) = cli.command.split();
        if let Some(path) = &o.config {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let cfg = RunConfig::from_json(&text)?;
            if cfg.command != command {
                return Err(Error::Config(format!("config file is for {:?}, not {:?}", cfg.command, command)));
            }
            return Ok(cfg);
        }
        Ok(RunConfig {
            command,
            function: o.function,
            coeff: o.coeff,
            example: o.example,
            kind: o.kind,
            initial: o.initial,
            points: o.points,
            p: o.p,
            k: o.k,
            alpha: o.alpha,
            q: o.q,
            radius: o.radius,
            delta: o.delta,
            count: o.count,
            order: o.order,
            angular: o.angular,
            r_max: o.r_max,
            nodes_per_panel: o.nodes_per_panel,
            a_angles: o.a_angles,
            grid_refine: o.grid_refine.into(),
            weight: o.weight,
            corpus: o.corpus,
            output: o.output,
            csv: o.csv,
            seed: o.seed,
            strict: o.strict,
        })
    }
}

/// A CSV table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    /// RFC-4180 text: CRLF line ends, quoting where needed.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

/// Result of a run: the JSON report, an optional table and the strict verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Value,
    pub table: Option<Table>,
}

impl Outcome {
    /// Any `divergence_flag`, `accuracy_loss` or `overflow` set in the report.
    pub fn flagged(&self) -> bool {
        fn walk(v: &Value) -> bool {
            match v {
                Value::Object(m) => m.iter().any(|(k, v)| {
                    (matches!(k.as_str(), "divergence_flag" | "accuracy_loss" | "overflow") && v == &Value::Bool(true))
                        || walk(v)
                }),
                Value::Array(a) => a.iter().any(walk),
                _ => false,
            }
        }
        walk(&self.report)
    }

    pub fn report_text(&self) -> String {
        canonical_json(&self.report)
    }
}

/// Float with 17 significant digits; non-finite values have no JSON form.
pub fn format_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Pretty JSON with sorted keys and 17-digit floats.
pub fn canonical_json(v: &Value) -> String {
    fn write(out: &mut String, v: &Value, indent: usize) {
        let pad = |n: usize| "  ".repeat(n);
        match v {
            Value::Number(n) => match (n.as_u64(), n.as_i64()) {
                (Some(u), _) => write!(out, "{u}").unwrap(),
                (_, Some(i)) => write!(out, "{i}").unwrap(),
                _ => out.push_str(&format_number(n.as_f64().expect("json number"))),
            },
            Value::Array(a) if a.is_empty() => out.push_str("[]"),
            Value::Array(a) => {
                out.push_str("[\n");
                for (i, x) in a.iter().enumerate() {
                    out.push_str(&pad(indent + 1));
                    write(out, x, indent + 1);
                    out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
                }
                out.push_str(&pad(indent));
                out.push(']');
            }
            Value::Object(m) if m.is_empty() => out.push_str("{}"),
            Value::Object(m) => {
                out.push_str("{\n");
                let mut keys: Vec<&String> = m.keys().collect();
                keys.sort();
                for (i, key) in keys.iter().enumerate() {
                    out.push_str(&pad(indent + 1));
                    out.push_str(&Value::String((*key).clone()).to_string());
                    out.push_str(": ");
                    write(out, &m[*key], indent + 1);
                    out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
                }
                out.push_str(&pad(indent));
                out.push('}');
            }
            other => out.push_str(&other.to_string()),
        }
    }
    let mut out = String::new();
    write(&mut out, v, 0);
    out.push('\n');
    out
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn num(x: f64) -> String {
    format_number(x)
}

fn parse_complex(s: &str) -> Result<Complex64> {
    s.trim()
        .parse::<Complex64>()
        .ok()
        .filter(|c| c.re.is_finite() && c.im.is_finite())
        .ok_or_else(|| Error::Config(format!("bad complex number {s:?}")))
}

fn parse_point(s: &str) -> Result<(Complex64, usize)> {
    match s.rsplit_once(':') {
        Some((z, m)) => {
            let m = m.parse::<usize>().map_err(|_| Error::Config(format!("bad multiplicity in {s:?}")))?;
            Ok((parse_complex(z)?, m))
        }
        None => Ok((parse_complex(s)?, 1)),
    }
}

fn required<'a>(field: &'a Option<String>, name: &str) -> Result<&'a str> {
    field.as_deref().ok_or_else(|| Error::Config(format!("--{name} is required")))
}

fn spec_series(s: &str, n: usize) -> Result<PowerSeries> {
    Ok(s.parse::<SeriesSpec>()?.series(n))
}

fn weight(cfg: &RunConfig) -> Result<RadialWeight> {
    required(&cfg.weight, "weight")?.parse()
}

fn first_coeff(cfg: &RunConfig) -> Result<PowerSeries> {
    let s = cfg.coeff.first().ok_or_else(|| Error::Config("--coeff is required".into()))?;
    spec_series(s, cfg.order)
}

fn example(cfg: &RunConfig) -> Result<Option<NamedExample>> {
    cfg.example.as_deref().map(str::parse).transpose()
}

/// The equation from `--example` or from `--coeff` and `--initial`.
fn problem(cfg: &RunConfig) -> Result<(OdeProblem, Option<NamedExample>)> {
    let n = cfg.order;
    let ex = example(cfg)?;
    let (mut coeffs, default_init) = match (&ex, cfg.coeff.is_empty()) {
        (Some(e), true) => (vec![e.coefficient(n)], e.initial_values().to_vec()),
        (None, false) => (
            cfg.coeff.iter().map(|s| spec_series(s, n)).collect::<Result<Vec<_>>>()?,
            vec![Complex64::new(1.0, 0.0), ZERO],
        ),
        _ => return Err(Error::Config("give exactly one of --example or --coeff".into())),
    };
    if coeffs.len() == 1 {
        coeffs.push(PowerSeries::zero(n));
    }
    let order = coeffs.len();
    let mut init = if cfg.initial.is_empty() {
        default_init
    } else {
        cfg.initial.iter().map(|s| parse_complex(s)).collect::<Result<Vec<_>>>()?
    };
    init.resize(order.max(init.len()), ZERO);
    let p = OdeProblem::new(coeffs, init, n).map_err(|e| Error::Config(e.to_string()))?;
    Ok((p, ex))
}

fn coeff_table(f: &PowerSeries) -> Table {
    let mut t = Table::new(&["n", "re", "im"]);
    for (n, c) in f.coeffs().iter().enumerate() {
        t.push(vec![n.to_string(), num(c.re), num(c.im)]);
    }
    t
}

fn run_solve(cfg: &RunConfig) -> Result<(Value, Option<Table>)> {
    let (p, ex) = problem(cfg)?;
    let sol = ode::solve_series(&p);
    let reference_error = ex.map(|e| {
        let r = e.reference(cfg.order);
        sol.series.coeffs().iter().zip(r.coeffs()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    });
    let coeffs: Vec<[f64; 2]> = sol.series.coeffs().iter().map(|c| [c.re, c.im]).collect();
    let v = json!({
        "order": p.order(),
        "truncation_order": cfg.order,
        "overflow": sol.overflow,
        "coefficients": coeffs,
        "reference_error": reference_error,
    });
    Ok((v, Some(coeff_table(&sol.series))))
}

fn run_residual(cfg: &RunConfig, grid: &QuadratureGrid) -> Result<(Value, Option<Table>)> {
    let (p, _) = problem(cfg)?;
    let sol = ode::solve_series(&p);
    let residual = ode::residual(&sol.series, &p, grid);
    Ok((json!({ "residual": residual, "overflow": sol.overflow }), None))
}

/// Hyperbolic extent of the zero search along the real diameter.
pub const ZERO_SEARCH_T_MAX: f64 = 128.0;

fn run_zeros(cfg: &RunConfig) -> Result<(Value, Option<Table>)> {
    let ex = example(cfg)?.ok_or_else(|| Error::Config("--example is required".into()))?;
    let count = cfg.count.unwrap_or(20);
    let zeros = ode::real_axis_zeros(&ex, count, ZERO_SEARCH_T_MAX);
    let gamma = match ex {
        NamedExample::Hille { gamma } => Some(gamma),
        _ => None,
    };
    let mut table = Table::new(&["k", "t", "x", "gap", "reference_x", "error"]);
    let mut rows = Vec::new();
    let mut max_error: Option<f64> = None;
    for (k, z) in zeros.iter().enumerate() {
        let gap = (k > 0).then(|| z.t - zeros[k - 1].t);
        let reference = gamma.map(|g| (k as f64 * PI / (2.0 * g)).tanh());
        let error = reference.map(|r| (z.x - r).abs());
        if let Some(e) = error {
            max_error = Some(max_error.map_or(e, |m: f64| m.max(e)));
        }
        let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
        table.push(vec![k.to_string(), num(z.t), num(z.x), opt(gap), opt(reference), opt(error)]);
        rows.push(json!({ "k": k, "t": z.t, "x": z.x, "gap": gap, "reference_x": reference }));
    }
    let v = json!({
        "example": ex.to_string(),
        "zeros": rows,
        "expected_gap": gamma.map(|g| PI / (2.0 * g)),
        "max_error": max_error,
    });
    Ok((v, Some(table)))
}

fn run_separation(cfg: &RunConfig) -> Result<(Value, Option<Table>)> {
    let seq = if !cfg.points.is_empty() {
        let pts = cfg.points.iter().map(|s| parse_point(s)).collect::<Result<Vec<_>>>()?;
        ZeroSequence::new(pts).map_err(|e| Error::Config(e.to_string()))?
    } else {
        let ex = example(cfg)?.ok_or_else(|| Error::Config("give --point or --example".into()))?;
        let zeros = ode::real_axis_zeros(&ex, cfg.count.unwrap_or(10), ZERO_SEARCH_T_MAX);
        let mut pts: Vec<Complex64> = Vec::new();
        for z in &zeros {
            pts.push(Complex64::new(z.x, 0.0));
            if z.t > 0.0 {
                pts.push(Complex64::new(-z.x, 0.0));
            }
        }
        ZeroSequence::simple(&pts)?
    };
    let report = match cfg.delta {
        Some(d) => greedy_partition(&seq, d).map_err(|e| Error::Config(e.to_string()))?,
        None => separation_constants(&seq),
    };
    let mut table = Table::new(&["part", "re", "im"]);
    for (i, part) in report.partition.iter().enumerate() {
        for z in part {
            table.push(vec![i.to_string(), num(z.re), num(z.im)]);
        }
    }
    let v = json!({
        "points": seq.expanded().len(),
        "max_multiplicity": seq.max_multiplicity(),
        "separation_sum": max_separation_sum(&seq, 1),
        "report": to_value(&report),
    });
    Ok((v, Some(table)))
}

fn run_condition(cfg: &RunConfig, grid: &QuadratureGrid) -> Result<(Value, Option<Table>)> {
    let kind: ConditionKind = required(&cfg.kind, "kind")?.parse()?;
    let a = first_coeff(cfg)?;
    let three = || -> Result<[PowerSeries; 3]> {
        let mut v = cfg.coeff.iter().map(|s| spec_series(s, cfg.order)).collect::<Result<Vec<_>>>()?;
        v.resize(3, PowerSeries::zero(cfg.order));
        Ok([v[0].clone(), v[1].clone(), v[2].clone()])
    };
    let reports = |rs: Vec<conditions::ConditionReport>| json!({ "reports": to_value(&rs) });
    let radius = || cfg.radius.ok_or_else(|| Error::Config("--radius is required".into()));
    let v = match kind {
        ConditionKind::Nehari => reports(vec![conditions::nehari_sup(&a, grid)]),
        ConditionKind::Growth3 => {
            let c = three()?;
            reports(conditions::order3_growth([&c[0], &c[1], &c[2]], grid).to_vec())
        }
        ConditionKind::Area3 => {
            let c = three()?;
            reports(conditions::order3_area([&c[0], &c[1], &c[2]], grid).to_vec())
        }
        ConditionKind::Lalpha => {
            let alpha = cfg.alpha.ok_or_else(|| Error::Config("--alpha is required".into()))?;
            reports(vec![conditions::lalpha_norm(&a, alpha, grid)])
        }
        ConditionKind::Lmoa => reports(vec![conditions::lmoa_quantity(&a, grid)]),
        ConditionKind::LmoaSquare => reports(vec![conditions::lmoa_square(&a, grid)]),
        ConditionKind::BmoaDd => reports(vec![conditions::bmoa_dd(&a, grid)]),
        ConditionKind::BmoaH1 => reports(vec![conditions::bmoa_h1_cond(&a, radius()?, grid)]),
        ConditionKind::CauchyBound => {
            let z = parse_complex(cfg.points.first().ok_or_else(|| Error::Config("--point is required".into()))?)?;
            let r = radius()?;
            json!({ "value": conditions::cauchy_bound(&a, r, z, grid.angular_count())?, "radius": r })
        }
        ConditionKind::Decay => {
            let profiles = conditions::decay_conditions(&a, &hardy::PROFILE_RADII, grid);
            let mut table = Table::new(&["profile", "r", "value"]);
            for (name, rows) in [("lmoa", &profiles.lmoa), ("log-weighted", &profiles.log_weighted)] {
                for &(r, x) in rows {
                    table.push(vec![name.into(), num(r), num(x)]);
                }
            }
            return Ok((to_value(&profiles), Some(table)));
        }
        ConditionKind::BlochKernel => {
            let w = weight(cfg)?;
            let rep = weights::bloch_kernel_quantity(&a, &w, grid, cfg.radius, cfg.order)?;
            let lower = weights::bloch_kernel_lower_bound(&a, &w, grid, cfg.radius, cfg.order);
            json!({ "kernel": to_value(&rep), "lower_bound": lower })
        }
    };
    Ok((v, None))
}

fn run_norm(cfg: &RunConfig, grid: &QuadratureGrid) -> Result<(Value, Option<Table>)> {
    let f = spec_series(required(&cfg.function, "function")?, cfg.order)?;
    let space = required(&cfg.kind, "space")?;
    let p = cfg.p.first().copied().unwrap_or(2.0);
    let mut table = None;
    let est = match space {
        "hp" => {
            let mut t = Table::new(&["r", "mean"]);
            for (r, m) in norms::hp_means(&f, p, grid)? {
                t.push(vec![num(r), num(m)]);
            }
            table = Some(t);
            norms::hp_norm(&f, p, grid)?
        }
        "growth" => norms::growth_norm(&f, cfg.q.ok_or_else(|| Error::Config("--q is required".into()))?, grid),
        "bloch" => norms::bloch_norm(&f, grid),
        "bmoa-garsia" => norms::bmoa_garsia(&f, grid),
        "bmoa-h2" => norms::bmoa_h2_def(&f, grid)?,
        other => return Err(Error::Config(format!("unknown space {other:?}"))),
    };
    Ok((json!({ "space": space, "p": p, "estimate": to_value(&est) }), table))
}

fn run_kernels(cfg: &RunConfig) -> Result<(Value, Option<Table>)> {
    let w = weight(cfg)?;
    let pts = cfg.points.iter().map(|s| parse_complex(s)).collect::<Result<Vec<_>>>()?;
    let zeta = pts.first().copied().unwrap_or(Complex64::new(0.5, 0.0));
    let u = pts.get(1).copied().unwrap_or(Complex64::new(0.0, 0.5));
    let value = weights::kernel_eval(&w, zeta, u, cfg.order)?;
    let closed_form = match w.profile() {
        WeightProfile::Standard { alpha } if w.is_normalized() => {
            Some((Complex64::new(1.0, 0.0) - u * zeta.conj()).powf(-2.0 - alpha))
        }
        _ => None,
    };
    let residual = weights::kernel_derivative_residual(&w, zeta, u, cfg.order)?;
    let regularity = weights::regularity_constants(&w, &weights::default_regularity_pairs());
    let coeffs = weights::kernel_coefficients(&w, cfg.order);
    let mut table = Table::new(&["n", "coefficient"]);
    for (n, c) in coeffs.iter().enumerate() {
        table.push(vec![n.to_string(), num(*c)]);
    }
    let v = json!({
        "weight": cfg.weight,
        "zeta": [zeta.re, zeta.im],
        "u": [u.re, u.im],
        "kernel": [value.re, value.im],
        "closed_form": closed_form.map(|c| [c.re, c.im]),
        "closed_form_error": closed_form.map(|c| (c - value).norm()),
        "derivative_residual": residual,
        "regularity": match regularity {
            Ok(r) => to_value(&r),
            Err(e) => json!({ "error": e.to_string() }),
        },
    });
    Ok((v, Some(table)))
}

/// Test functions for the inner-product identities.
const GREEN_FUNCTIONS: [&str; 6] = [
    "poly:1",
    "poly:0,1",
    "poly:0.5,-0.25i,0.75",
    "poly:0.2,0,0,1-0.5i",
    "exp:eps=0.5",
    "geometric:w=0.5",
];

/// `(ζ, u)` pairs with `|uζ̄| ≤ 0.8`.
fn kernel_points() -> Vec<(Complex64, Complex64)> {
    let mut out = Vec::new();
    for &(r1, r2) in &[(0.0, 0.5), (0.5, 0.5), (0.9, 0.85), (0.3, 0.95)] {
        for j in 0..4 {
            let t = j as f64 * PI / 3.0 + 0.2;
            out.push((Complex64::from_polar(r1, t), Complex64::from_polar(r2, 1.1 - t)));
        }
    }
    out
}

/// Highest moment index in the moment suite.
pub const MOMENT_SUITE_MAX: usize = 64;
/// Random polynomials in the HSS suite and their degree.
pub const HSS_SUITE_SIZE: usize = 6;
pub const HSS_SUITE_DEGREE: usize = 8;

fn run_identities(cfg: &RunConfig, grid: &QuadratureGrid) -> Result<(Value, Option<Table>)> {
    let suite = required(&cfg.kind, "suite")?;
    let mut table = Table::new(&["case", "residual"]);
    let mut push = |case: String, r: f64| table.push(vec![case, num(r)]);
    let mut residuals = Vec::new();
    match suite {
        "green" => {
            let w = weight(cfg)?;
            let fs = GREEN_FUNCTIONS.iter().map(|s| spec_series(s, cfg.order.min(64))).collect::<Result<Vec<_>>>()?;
            for (i, f) in fs.iter().enumerate() {
                for (j, g) in fs.iter().enumerate() {
                    let r = weights::green_identity_residual(f, g, &w, grid)?;
                    push(format!("{} | {}", GREEN_FUNCTIONS[i], GREEN_FUNCTIONS[j]), r);
                    residuals.push(r);
                }
            }
        }
        "kernel-derivative" => {
            let w = weight(cfg)?;
            for (zeta, u) in kernel_points() {
                let r = weights::kernel_derivative_residual(&w, zeta, u, cfg.order)?;
                push(format!("zeta={zeta} u={u}"), r);
                residuals.push(r);
            }
        }
        "moments" => {
            let w = weight(cfg)?;
            let t = w.tilde();
            for n in 0..=MOMENT_SUITE_MAX {
                let lhs = t.moment((2 * n + 1) as f64) * (n + 1) as f64;
                let rhs = w.moment((2 * n + 3) as f64);
                let r = (lhs - rhs).abs() / rhs.abs();
                push(format!("n={n}"), r);
                residuals.push(r);
            }
        }
        "hss" => {
            let ps = if cfg.p.is_empty() { vec![0.5, 1.0, 2.0, 4.0] } else { cfg.p.clone() };
            let fs: Vec<(String, PowerSeries)> = match &cfg.function {
                Some(s) => vec![(s.clone(), spec_series(s, cfg.order)?)],
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    (0..HSS_SUITE_SIZE)
                        .map(|i| (format!("outer-roots-{i}"), random_outer_root_polynomial(&mut rng, HSS_SUITE_DEGREE)))
                        .collect()
                }
            };
            for (name, f) in &fs {
                for &p in &ps {
                    let r = hardy::hss_residual(f, p, grid)?;
                    push(format!("{name} p={p}"), r);
                    residuals.push(r);
                }
            }
        }
        other => return Err(Error::Config(format!("unknown identity suite {other:?}"))),
    }
    let max = residuals.iter().copied().fold(0.0, f64::max);
    Ok((json!({ "suite": suite, "cases": residuals.len(), "max_residual": max }), Some(table)))
}

fn run_hardy(cfg: &RunConfig, grid: &QuadratureGrid) -> Result<(Value, Option<Table>)> {
    let f = spec_series(required(&cfg.function, "function")?, cfg.order)?;
    let p = cfg.p.first().copied().unwrap_or(2.0);
    let k = cfg.k.first().copied().unwrap_or(1);
    let hss = hardy::hss_report(&f, p, grid)?;
    let sides = hardy::prop_main_sides(&f, p, k, grid)?;
    let params = NontangentialParams::default();
    let profile = hardy::nt_max_profile(&f, &params, grid);
    let mut table = Table::new(&["j", "theta", "nt_max"]);
    for (j, v) in profile.iter().enumerate() {
        table.push(vec![j.to_string(), num(2.0 * PI * j as f64 / profile.len() as f64), num(*v)]);
    }
    let nt_p = profile.iter().map(|v| v.powf(p)).sum::<f64>() / profile.len().max(1) as f64;
    let v = json!({
        "p": p,
        "k": k,
        "hss": to_value(&hss),
        "main_sides": to_value(&sides),
        "ratio_upper": sides.ratio_upper(),
        "ratio_lower": sides.ratio_lower(),
        "nontangential_p_mean": nt_p,
        "aperture": params.aperture(),
        "loc_univ": match hardy::loc_univ_margin(&f, grid) {
            Ok(r) => to_value(&r),
            Err(e) => json!({ "error": e.to_string() }),
        },
    });
    Ok((v, Some(table)))
}

fn corpus(cfg: &RunConfig) -> Result<Corpus> {
    match &cfg.corpus {
        Some(path) => Corpus::load(path).map_err(|e| Error::Config(e.to_string())),
        None => Ok(Corpus::default_with_seed(cfg.seed)),
    }
}

fn run_experiment(cfg: &RunConfig, grid: &QuadratureGrid) -> Result<(Value, Option<Table>)> {
    let name = required(&cfg.kind, "name")?;
    match name {
        "main-constants" => {
            let c = corpus(cfg)?;
            let ps = if cfg.p.is_empty() { vec![0.5, 1.0, 2.0, 4.0, 6.0] } else { cfg.p.clone() };
            let ks = if cfg.k.is_empty() { vec![1, 2] } else { cfg.k.clone() };
            let tracks = hardy::main_constants(&c, cfg.order, &ps, &ks, grid)?;
            let mut t = Table::new(&["inequality", "p", "k", "constant", "worst_entry"]);
            for x in &tracks {
                let ineq = to_value(&x.inequality).as_str().unwrap_or_default().to_string();
                t.push(vec![ineq, num(x.p), x.k.to_string(), num(x.constant), x.worst_entry.clone()]);
            }
            Ok((json!({ "corpus_size": c.len(), "tracks": to_value(&tracks) }), Some(t)))
        }
        "nonvanishing" => {
            let spec = cfg.function.as_deref().unwrap_or("exp:eps=0.1");
            let rep = hardy::nonvanishing_bound_check(&spec_series(spec, cfg.order)?, grid)?;
            let mut t = Table::new(&["p", "norm_p", "area", "c_required", "c_scaling"]);
            for r in &rep.rows {
                t.push(vec![num(r.p), num(r.norm_p), num(r.area), num(r.c_required), num(r.c_scaling)]);
            }
            Ok((json!({ "function": spec, "report": to_value(&rep) }), Some(t)))
        }
        "membership" => {
            let a = first_coeff(cfg)?;
            let p = cfg.p.first().copied().unwrap_or(2.0);
            let rep = hardy::hp_membership_experiment(&a, p, cfg.order, grid)?;
            let mut t = Table::new(&["solution", "r", "mean"]);
            for (i, s) in rep.solutions.iter().enumerate() {
                for &(r, m) in &s.means {
                    t.push(vec![i.to_string(), num(r), num(m)]);
                }
            }
            Ok((to_value(&rep), Some(t)))
        }
        "bloch-bound" => {
            let a = first_coeff(cfg)?;
            let w = weight(cfg)?;
            let init = [Complex64::new(1.0, 0.0), ZERO];
            let rep = weights::bloch_solution_bound(&a, &w, init, grid, cfg.order)?;
            Ok((to_value(&rep), None))
        }
        "moment-ratio" => {
            let mut t = Table::new(&["n", "ratio"]);
            let mut rows = Vec::new();
            let mut n = 16u64;
            while n <= 4096 {
                let r = conditions::lacunary_moment_ratio(n);
                t.push(vec![n.to_string(), num(r)]);
                rows.push(json!([n, r]));
                n *= 2;
            }
            Ok((json!({ "ratios": rows }), Some(t)))
        }
        "corpus" => {
            let c = corpus(cfg)?;
            let mut t = Table::new(&["name", "spec"]);
            for e in &c.entries {
                t.push(vec![e.name.clone(), e.spec.to_string()]);
            }
            Ok((to_value(&c), Some(t)))
        }
        other => Err(Error::Config(format!("unknown experiment {other:?}"))),
    }
}

/// Runs a configuration and assembles the report.
pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    let grid = cfg.grid()?;
    let (result, table) = match cfg.command {
        CommandName::Solve => run_solve(cfg)?,
        CommandName::Residual => run_residual(cfg, &grid)?,
        CommandName::Zeros => run_zeros(cfg)?,
        CommandName::Separation => run_separation(cfg)?,
        CommandName::Condition => run_condition(cfg, &grid)?,
        CommandName::Norm => run_norm(cfg, &grid)?,
        CommandName::Kernels => run_kernels(cfg)?,
        CommandName::Identities => run_identities(cfg, &grid)?,
        CommandName::Hardy => run_hardy(cfg, &grid)?,
        CommandName::Experiment => run_experiment(cfg, &grid)?,
    };
    let report = json!({
        "schema": SCHEMA,
        "versions": { "disclab": env!("CARGO_PKG_VERSION") },
        "config": to_value(cfg),
        "grid": to_value(&GridFingerprint::from(&grid)),
        "result": result,
    });
    Ok(Outcome { report, table })
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Io(_) => EXIT_CONFIG,
        _ => EXIT_NUMERIC,
    }
}

/// Parses `argv`, runs, writes the report and table, and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    let result = RunConfig::try_from(cli).and_then(|cfg| {
        let out = execute(&cfg)?;
        let text = out.report_text();
        match &cfg.output {
            Some(path) => write_file(path, &text)?,
            None => print!("{text}"),
        }
        if let (Some(path), Some(table)) = (&cfg.csv, &out.table) {
            write_file(path, &table.to_csv())?;
        }
        Ok(if cfg.strict && out.flagged() { EXIT_STRICT } else { 0 })
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Caps the global thread pool from [`THREADS_VAR`]; invalid values are a config error.
pub fn init_threads() -> Result<()> {
    match std::env::var(THREADS_VAR) {
        Ok(v) => {
            let n: usize = v
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| Error::Config(format!("{THREADS_VAR}={v:?} is not a positive integer")))?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::Config(e.to_string()))
        }
        Err(_) => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_from(args: &[&str]) -> RunConfig {
        let argv = std::iter::once("disclab").chain(args.iter().copied());
        RunConfig::try_from(Cli::try_parse_from(argv).unwrap()).unwrap()
    }

    #[test]
    fn config_round_trips_to_canonical_json() {
        let cfg = cfg_from(&["condition", "--kind", "lalpha", "--coeff", "poly:0.1,0.2", "--alpha", "0.1", "--grid-refine"]);
        let text = cfg.to_canonical_json();
        let back = RunConfig::from_json(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_canonical_json(), text);
    }

    #[test]
    fn numbers_carry_seventeen_digits() {
        assert_eq!(format_number(0.1), "1.0000000000000001e-1");
        assert_eq!(format_number(-2.5), "-2.5000000000000000e0");
        let text = canonical_json(&json!({ "b": 1, "a": [0.5, -3] }));
        assert_eq!(text, "{\n  \"a\": [\n    5.0000000000000000e-1,\n    -3\n  ],\n  \"b\": 1\n}\n");
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["a"][0], json!(0.5));
    }

    #[test]
    fn csv_quotes_and_uses_crlf() {
        let mut t = Table::new(&["case", "x"]);
        t.push(vec!["a, b".into(), num(1.0)]);
        assert_eq!(t.to_csv(), "case,x\r\n\"a, b\",1.0000000000000000e0\r\n");
    }

    #[test]
    fn config_errors_and_strict_codes() {
        assert_eq!(run(["disclab", "condition", "--kind", "nope", "--coeff", "poly:1"]), EXIT_CONFIG);
        assert_eq!(run(["disclab", "frobnicate"]), EXIT_CONFIG);
        assert_eq!(run(["disclab", "norm", "--function", "poly:1", "--kind", "hp", "--order", "8", "--r-max", "1.5"]), EXIT_CONFIG);
        let out = tempfile_path("strict.json");
        let code = run([
            "disclab", "solve", "--coeff", "poly:1e200", "--initial", "1", "--order", "64", "--strict",
            "--output", out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_STRICT);
    }

    fn tempfile_path(name: &str) -> PathBuf {
        std::env::temp_dir().join(format!("disclab-cli-{}-{name}", std::process::id()))
    }

    #[test]
    fn refinement_reports_previous_value_as_coarse() {
        let base = cfg_from(&["condition", "--kind", "nehari", "--coeff", "poly:0.3,0.2", "--order", "16"]);
        let mut refined = base.clone();
        refined.grid_refine = 1;
        let v0 = execute(&base).unwrap().report["result"]["reports"][0]["value"].as_f64().unwrap();
        let c1 = execute(&refined).unwrap().report["result"]["reports"][0]["value_coarse"].as_f64().unwrap();
        assert_eq!(v0, c1);
    }
}
