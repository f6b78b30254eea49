//! CSV ingestion, JSON reports and the command dispatcher behind the
//! `scents` binary.
//!
//! Exit codes: `0` success (report on stdout), `1` estimation or input error
//! (structured JSON on stderr), `2` usage error.

use std::collections::HashSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::estimator::{fit, FitConfig, FixedFit, Intervals, Tau};
use crate::highdim::{fit_hd, HdConfig, StageModes};
use crate::inference::{bootstrap_ci, BootstrapConfig};
use crate::numerics::LambdaMode;
use crate::simulate::{self, endogeneity_scale, BKind, DgpConfig};
use crate::spline;

pub const SCHEMA_VERSION: u32 = 1;

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

/// Explicit column mapping, read from a JSON file such as
/// `{"y": "wage", "q": "score", "x": ["age"], "z": ["age", "exam"]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub y: String,
    pub q: String,
    #[serde(default)]
    pub x: Vec<String>,
    pub z: Vec<String>,
}

impl ColumnMapping {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidArgument(format!("mapping file {}: {e}", path.display())))
    }

    /// `y`, `q`, then every `x_*` and `z_*` column in header order.
    pub fn from_prefixes(headers: &[String]) -> Self {
        let pick = |prefix: &str| headers.iter().filter(|h| h.starts_with(prefix)).cloned().collect();
        Self {
            y: "y".into(),
            q: "q".into(),
            x: pick("x_"),
            z: pick("z_"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub data: Dataset,
    /// Rows skipped because a mapped cell was empty or `NA`.
    pub dropped: usize,
    pub mapping: ColumnMapping,
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c.eq_ignore_ascii_case("na")
}

/// Reads a header-row CSV. Row numbers in errors count the header as row 1.
pub fn ingest_csv(path: &Path, mapping: Option<&ColumnMapping>) -> Result<Ingested> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Io(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mapping = mapping.cloned().unwrap_or_else(|| ColumnMapping::from_prefixes(&headers));
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    if mapping.z.is_empty() {
        return Err(Error::MissingColumn("z_* (at least one Z column)".into()));
    }
    let iy = find(&mapping.y)?;
    let iq = find(&mapping.q)?;
    let ix: Vec<usize> = mapping.x.iter().map(|c| find(c)).collect::<Result<_>>()?;
    let iz: Vec<usize> = mapping.z.iter().map(|c| find(c)).collect::<Result<_>>()?;
    let mut wanted: Vec<usize> = vec![iy, iq];
    wanted.extend(&ix);
    wanted.extend(&iz);
    let unique: HashSet<usize> = wanted.iter().copied().collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut dropped = 0;
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Io(e.to_string()))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(k + 2);
        if unique.iter().any(|&c| record.get(c).is_none_or(is_missing)) {
            dropped += 1;
            continue;
        }
        let mut values = Vec::with_capacity(wanted.len());
        for &c in &wanted {
            let cell = record.get(c).unwrap_or("").trim();
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: line,
                column: headers[c].clone(),
                message: format!("cannot parse {cell:?} as a number"),
            })?;
            values.push(v);
        }
        rows.push(values);
    }
    let n = rows.len();
    let (p1, p2) = (ix.len(), iz.len());
    let y = DVector::from_fn(n, |i, _| rows[i][0]);
    let q = DVector::from_fn(n, |i, _| rows[i][1]);
    let x = DMatrix::from_fn(n, p1, |i, j| rows[i][2 + j]);
    let z = DMatrix::from_fn(n, p2, |i, j| rows[i][2 + p1 + j]);
    Ok(Ingested {
        data: Dataset::new(y, q, x, z)?,
        dropped,
        mapping,
    })
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub config: Value,
    pub estimates: Value,
    pub diagnostics: Value,
}

impl Report {
    fn new(command: &str, config: Value, estimates: Value, diagnostics: Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config,
            estimates,
            diagnostics,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Row label of the percentile interval, e.g. `Bootstrap 95% C.I.`.
pub fn ci_label(level: f64) -> String {
    let pct = (level * 100.0 * 1e6).round() / 1e6;
    format!("Bootstrap {pct}% C.I.")
}

pub fn error_json(err: &Error) -> Value {
    let mut obj = json!({
        "kind": err.kind(),
        "message": err.to_string(),
    });
    let extra = match err {
        Error::SingularDesign { condition, columns, .. } => json!({ "condition": condition, "columns": columns }),
        Error::EmptySupport { tau } => json!({ "tau": tau }),
        Error::Parse { row, column, .. } => json!({ "row": row, "column": column }),
        Error::LassoNotConverged {
            kkt_residual, iterations, ..
        } => json!({ "kkt_residual": kkt_residual, "iterations": iterations }),
        Error::BootstrapFailure { failed, total } | Error::Harness { failed, total } => {
            json!({ "failed": failed, "total": total })
        }
        _ => json!({}),
    };
    if let (Some(o), Value::Object(e)) = (obj.as_object_mut(), extra) {
        o.extend(e);
    }
    json!({ "error": obj })
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(name = "scents", version, about = "Treatment-effect estimation with an endogenous assignment score")]
pub struct Cli {
    /// Worker threads for bootstrap, Monte Carlo and cross-validation.
    #[arg(long, env = "SCENTS_THREADS", global = true)]
    pub threads: Option<usize>,

    /// Include wall-clock runtimes in the report (breaks byte-identity).
    #[arg(long, global = true)]
    pub timings: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fixed-dimension estimate with three-way rotation.
    Fit(FitArgs),
    /// High-dimensional debiased estimate.
    FitHd(FitHdArgs),
    /// Pairs-bootstrap percentile interval.
    Bootstrap(BootstrapArgs),
    /// Monte Carlo study on a synthetic design.
    Simulate(SimulateArgs),
    /// Property suite of the spline basis.
    SplineCheck(SplineArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// JSON column mapping overriding the `y`, `q`, `x_*`, `z_*` convention.
    #[arg(long)]
    pub map: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TuningArgs {
    /// Truncation level; defaults to the 0.9 quantile of |eta_hat|.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Number of spline intervals; defaults to a sample-size rule.
    #[arg(long = "K")]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl TuningArgs {
    fn tau(&self) -> Tau {
        self.tau.map_or(Tau::Auto, Tau::Fixed)
    }

    fn intervals(&self) -> Intervals {
        self.k.map_or(Intervals::Auto, Intervals::Fixed)
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub tuning: TuningArgs,
    /// Weighted least squares for heteroskedastic errors.
    #[arg(long)]
    pub wls: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LambdaChoice {
    Cv,
    Theory,
}

impl LambdaChoice {
    fn mode(self) -> LambdaMode {
        match self {
            LambdaChoice::Cv => LambdaMode::Cv { folds: 5 },
            LambdaChoice::Theory => LambdaMode::Theory,
        }
    }

    fn name(self) -> &'static str {
        match self {
            LambdaChoice::Cv => "cv",
            LambdaChoice::Theory => "theory",
        }
    }
}

#[derive(Debug, Args)]
pub struct FitHdArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub tuning: TuningArgs,
    #[arg(long = "lambda-mode", value_enum, default_value = "theory")]
    pub lambda_mode: LambdaChoice,
}

#[derive(Debug, Args)]
pub struct BootstrapArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub tuning: TuningArgs,
    #[arg(long)]
    pub wls: bool,
    /// Bootstrap replicates.
    #[arg(long = "B", default_value_t = 500)]
    pub b: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Reuse the point-fit split in every replicate.
    #[arg(long)]
    pub fixed_split: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimEstimator {
    Fixed,
    Wls,
    Hd,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Design as comma-separated key=value pairs, e.g.
    /// `preset=endogenous,n=3000,rho=0.6`. May be repeated.
    #[arg(long)]
    pub dgp: Vec<String>,
    /// Monte Carlo replications.
    #[arg(long = "R", default_value_t = 200)]
    pub r: usize,
    #[command(flatten)]
    pub tuning: TuningArgs,
    #[arg(long, value_enum, default_value = "fixed")]
    pub estimator: SimEstimator,
    #[arg(long = "lambda-mode", value_enum, default_value = "theory")]
    pub lambda_mode: LambdaChoice,
}

#[derive(Debug, Args)]
pub struct SplineArgs {
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long = "K", default_value_t = 8)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::InvalidArgument(format!("{key}: expected a boolean, got {v:?}"))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::InvalidArgument(format!("{key}: cannot parse {v:?}")))
}

/// Builds a design from `key=value` pairs. Recognized keys: `preset`
/// (`reference`, `endogenous`, `exogenous`, `heteroskedastic`, `high_dim`),
/// `n`, `p1`, `p2`, `s`, `alpha0`, `rho`, `sigma_eps`, `b` (`zero`, `sine`,
/// `quadratic_centered`, `linear` or `linear:<slope>`), `heteroskedastic`,
/// `overlap`, `seed`.
pub fn parse_dgp(specs: &[String], default_seed: u64) -> Result<DgpConfig> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    for spec in specs {
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("--dgp entry {item:?} is not key=value")))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
    let get = |key: &str| pairs.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
    let n: usize = get("n").map(|v| parse_num("n", v)).transpose()?.unwrap_or(900);
    let seed: u64 = get("seed").map(|v| parse_num("seed", v)).transpose()?.unwrap_or(default_seed);
    let rho: Option<f64> = get("rho").map(|v| parse_num("rho", v)).transpose()?;
    let preset = get("preset").unwrap_or("reference");
    let mut cfg = match preset {
        "reference" => DgpConfig::reference(n, seed),
        "endogenous" => DgpConfig::endogenous(n, rho.unwrap_or(0.6), seed),
        "exogenous" => DgpConfig::exogenous(n, seed),
        "heteroskedastic" => DgpConfig::heteroskedastic(n, seed),
        "high_dim" => {
            let p1 = get("p1").map(|v| parse_num("p1", v)).transpose()?.unwrap_or(500);
            let p2 = get("p2").map(|v| parse_num("p2", v)).transpose()?.unwrap_or(500);
            let s = get("s").map(|v| parse_num("s", v)).transpose()?.unwrap_or(3);
            DgpConfig::high_dim(n, p1, p2, s, seed)
        }
        other => return Err(Error::InvalidArgument(format!("unknown preset {other:?}"))),
    };
    for (k, v) in &pairs {
        match k.as_str() {
            "preset" | "n" | "seed" | "p1" | "p2" | "s" => {}
            "rho" => cfg.rho = parse_num(k, v)?,
            "alpha0" => cfg.alpha0 = parse_num(k, v)?,
            "sigma_eps" => cfg.sigma_eps = parse_num(k, v)?,
            "heteroskedastic" => cfg.heteroskedastic = parse_bool(k, v)?,
            "overlap" => cfg.overlap = parse_bool(k, v)?,
            "b" => {}
            other => return Err(Error::InvalidArgument(format!("unknown --dgp key {other:?}"))),
        }
    }
    if preset != "high_dim" && (get("p1").is_some() || get("p2").is_some()) {
        return Err(Error::InvalidArgument("p1/p2 are only configurable with preset=high_dim".into()));
    }
    if let Some(b) = get("b") {
        cfg.b_kind = match b {
            "zero" => BKind::Zero,
            "sine" => BKind::Sine,
            "quadratic_centered" => BKind::QuadraticCentered,
            "linear" => BKind::Linear(endogeneity_scale(cfg.rho, cfg.sigma_eps)),
            other => match other.strip_prefix("linear:") {
                Some(c) => BKind::Linear(parse_num("b", c)?),
                None => return Err(Error::InvalidArgument(format!("unknown b kind {other:?}"))),
            },
        };
    }
    cfg.validate()?;
    Ok(cfg)
}

fn tau_json(t: Tau) -> Value {
    match t {
        Tau::Auto => json!("auto"),
        Tau::Fixed(v) => json!(v),
    }
}

fn k_json(k: Intervals) -> Value {
    match k {
        Intervals::Auto => json!("auto"),
        Intervals::Fixed(v) => json!(v),
    }
}

fn vec_json(v: &DVector<f64>) -> Value {
    json!(v.iter().collect::<Vec<_>>())
}

fn matrix_json(m: &DMatrix<f64>) -> Value {
    json!(m.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn input_json(input: &InputArgs) -> Value {
    json!({
        "input": input.input.display().to_string(),
        "map": input.map.as_ref().map(|p| p.display().to_string()),
    })
}

fn merge(a: Value, b: Value) -> Value {
    match (a, b) {
        (Value::Object(mut a), Value::Object(b)) => {
            a.extend(b);
            Value::Object(a)
        }
        (a, _) => a,
    }
}

fn load(input: &InputArgs) -> Result<Ingested> {
    let mapping = input.map.as_deref().map(ColumnMapping::from_file).transpose()?;
    ingest_csv(&input.input, mapping.as_ref())
}

fn fixed_fit_json(f: &FixedFit) -> (Value, Value) {
    let last = f.rotations.last();
    let estimates = json!({
        "alpha_bar": f.alpha_bar,
        "alpha_per_rotation": f.alpha_per_rotation,
        "theta": vec_json(&f.theta),
        "gamma_hat": vec_json(&f.gamma_hat),
    });
    let diagnostics = json!({
        "n_used": f.n_used,
        "masked_fraction": last.map(|r| r.masked_alpha as f64 / r.rows_alpha as f64),
        "condition_numbers": f.rotations.iter().map(|r| r.condition).collect::<Vec<_>>(),
        "rotations": serde_json::to_value(&f.rotations).expect("serializable"),
        "omega_tau_hat": matrix_json(&f.omega_tau_hat),
        "warnings": serde_json::to_value(&f.warnings).expect("serializable"),
    });
    (estimates, diagnostics)
}

fn run_fit(a: &FitArgs) -> Result<Report> {
    let ing = load(&a.input)?;
    let cfg = FitConfig {
        tau: a.tuning.tau(),
        k: a.tuning.intervals(),
        seed: a.tuning.seed,
        wls: a.wls,
        ..FitConfig::default()
    };
    let f = fit(&ing.data, &cfg)?;
    let (estimates, diagnostics) = fixed_fit_json(&f);
    let config = merge(
        input_json(&a.input),
        json!({
            "tau": tau_json(cfg.tau),
            "K": k_json(cfg.k),
            "seed": cfg.seed,
            "wls": cfg.wls,
        }),
    );
    let diagnostics = merge(json!({ "n_rows": ing.data.n(), "dropped_rows": ing.dropped }), diagnostics);
    Ok(Report::new("fit", config, estimates, diagnostics))
}

fn run_fit_hd(a: &FitHdArgs) -> Result<Report> {
    let ing = load(&a.input)?;
    let cfg = HdConfig {
        lambda_mode: StageModes::uniform(a.lambda_mode.mode()),
        tau: a.tuning.tau(),
        k: a.tuning.intervals(),
        seed: a.tuning.seed,
        ..HdConfig::default()
    };
    let f = fit_hd(&ing.data, &cfg)?;
    let config = merge(
        input_json(&a.input),
        json!({
            "tau": tau_json(cfg.tau),
            "K": k_json(cfg.k),
            "seed": cfg.seed,
            "lambda_mode": a.lambda_mode.name(),
        }),
    );
    let estimates = json!({
        "alpha_hat": f.alpha_hat,
        "se": f.se(),
        "ci95": [f.ci95.0, f.ci95.1],
        "sigma1_hat": f.sigma1_hat,
        "sigma2_hat": f.sigma2_hat,
    });
    let support = |v: &DVector<f64>| v.iter().filter(|c| **c != 0.0).count();
    let diagnostics = json!({
        "n_rows": ing.data.n(),
        "dropped_rows": ing.dropped,
        "n3": f.n3,
        "tau": f.tau,
        "K": f.intervals,
        "lambdas": { "lambda_gamma": f.lambdas.gamma, "lambda_beta": f.lambdas.beta, "lambda_0": f.lambdas.y, "lambda_1": f.lambdas.s },
        "support_sizes": {
            "gamma": support(&f.gamma_hat),
            "beta": support(&f.beta_hat),
            "theta_y": support(&f.theta_y),
            "theta_s": support(&f.theta_s),
        },
    });
    Ok(Report::new("fit-hd", config, estimates, diagnostics))
}

fn run_bootstrap(a: &BootstrapArgs) -> Result<Report> {
    let ing = load(&a.input)?;
    let cfg = FitConfig {
        tau: a.tuning.tau(),
        k: a.tuning.intervals(),
        seed: a.tuning.seed,
        wls: a.wls,
        ..FitConfig::default()
    };
    let bcfg = BootstrapConfig {
        replicates: a.b,
        level: a.level,
        seed: a.tuning.seed,
        resplit: !a.fixed_split,
    };
    let res = bootstrap_ci(&ing.data, &cfg, &bcfg)?;
    let config = merge(
        input_json(&a.input),
        json!({
            "tau": tau_json(cfg.tau),
            "K": k_json(cfg.k),
            "seed": cfg.seed,
            "wls": cfg.wls,
            "B": a.b,
            "level": a.level,
            "resplit": bcfg.resplit,
        }),
    );
    let mut table = serde_json::Map::new();
    table.insert("Point Estimate".into(), json!(res.point));
    table.insert("Bootstrap mean.".into(), json!(res.boot_mean));
    table.insert("Bootstrap s.e.".into(), json!(res.boot_se));
    table.insert(ci_label(res.level), json!([res.ci.0, res.ci.1]));
    let diagnostics = json!({
        "n_rows": ing.data.n(),
        "dropped_rows": ing.dropped,
        "B": res.b,
        "failed_replicates": res.failures,
    });
    Ok(Report::new("bootstrap", config, Value::Object(table), diagnostics))
}

fn run_simulate(a: &SimulateArgs) -> Result<Report> {
    let dgp = parse_dgp(&a.dgp, a.tuning.seed)?;
    let summary = match a.estimator {
        SimEstimator::Fixed | SimEstimator::Wls => {
            let cfg = FitConfig {
                tau: a.tuning.tau(),
                k: a.tuning.intervals(),
                seed: a.tuning.seed,
                wls: a.estimator == SimEstimator::Wls,
                ..FitConfig::default()
            };
            simulate::monte_carlo(&dgp, &cfg, a.r)?
        }
        SimEstimator::Hd => {
            if a.r < 20 {
                return Err(Error::InvalidArgument(format!("need R >= 20, got {}", a.r)));
            }
            let base = HdConfig {
                lambda_mode: StageModes::uniform(a.lambda_mode.mode()),
                tau: a.tuning.tau(),
                k: a.tuning.intervals(),
                ..HdConfig::default()
            };
            simulate::monte_carlo_with(&dgp, a.r, |r, data| {
                let cfg = HdConfig {
                    seed: crate::seed::sub_seed(a.tuning.seed, r as u64),
                    ..base
                };
                fit_hd(data, &cfg).map(|f| f.alpha_hat)
            })?
        }
    };
    let estimator = match a.estimator {
        SimEstimator::Fixed => "fixed",
        SimEstimator::Wls => "wls",
        SimEstimator::Hd => "hd",
    };
    let config = json!({
        "dgp": serde_json::to_value(&dgp).expect("serializable"),
        "R": a.r,
        "estimator": estimator,
        "tau": tau_json(a.tuning.tau()),
        "K": k_json(a.tuning.intervals()),
        "seed": a.tuning.seed,
    });
    let estimates = json!({
        "bias": summary.bias,
        "sd": summary.sd,
        "rmse": summary.rmse,
        "ks_stat": summary.ks_stat,
        "naive_bias": summary.naive_bias,
    });
    let diagnostics = json!({
        "replications": summary.replications,
        "failures": summary.failures,
        "ks_critical_1pct": summary.ks_critical_1pct(),
        "bias_se": summary.bias_se(),
        "naive_sd": summary.naive_sd,
    });
    Ok(Report::new("simulate", config, estimates, diagnostics))
}

fn run_spline(a: &SplineArgs) -> Result<Report> {
    let checks = spline::checks::run(a.tau, a.k, a.seed)?;
    let all = checks.iter().all(|c| c.passed);
    Ok(Report::new(
        "spline-check",
        json!({ "tau": a.tau, "K": a.k, "seed": a.seed }),
        json!({ "all_passed": all }),
        json!({ "checks": serde_json::to_value(&checks).expect("serializable") }),
    ))
}

fn dispatch(cli: &Cli) -> Result<Report> {
    let start = Instant::now();
    let mut report = match &cli.command {
        Command::Fit(a) => run_fit(a),
        Command::FitHd(a) => run_fit_hd(a),
        Command::Bootstrap(a) => run_bootstrap(a),
        Command::Simulate(a) => run_simulate(a),
        Command::SplineCheck(a) => run_spline(a),
    }?;
    if cli.timings {
        if let Value::Object(d) = &mut report.diagnostics {
            d.insert("runtime_ms".into(), json!(start.elapsed().as_secs_f64() * 1e3));
        }
    }
    Ok(report)
}

/// Parses `args` (including the program name) and runs the command, writing
/// the report to `out` and errors to `err`. Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    2
                }
            };
        }
    };
    let result = match cli.threads {
        Some(t) if t > 0 => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(Error::InvalidArgument(format!("cannot start {t} threads: {e}"))),
        },
        _ => dispatch(&cli),
    };
    match result {
        Ok(report) => {
            let _ = writeln!(out, "{}", report.to_json());
            0
        }
        Err(e) => {
            let _ = writeln!(err, "{}", serde_json::to_string_pretty(&error_json(&e)).expect("serializable"));
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ci_labels() {
        assert_eq!(ci_label(0.95), "Bootstrap 95% C.I.");
        assert_eq!(ci_label(0.9), "Bootstrap 90% C.I.");
        assert_eq!(ci_label(0.975), "Bootstrap 97.5% C.I.");
    }

    #[test]
    fn dgp_parsing() {
        let c = parse_dgp(&["preset=endogenous,n=3000,rho=0.6".into()], 4).unwrap();
        assert_eq!(c.n, 3000);
        assert_eq!(c.seed, 4);
        assert!(matches!(c.b_kind, BKind::Linear(s) if (s - 0.75).abs() < 1e-12));
        let c = parse_dgp(&["b=linear:0.3".into(), "heteroskedastic=true".into()], 0).unwrap();
        assert_eq!(c.b_kind, BKind::Linear(0.3));
        assert!(c.heteroskedastic);
        let c = parse_dgp(&["preset=high_dim,n=300,p1=50,p2=60".into()], 0).unwrap();
        assert_eq!((c.p1, c.p2), (50, 60));
        assert!(parse_dgp(&["bogus=1".into()], 0).is_err());
        assert!(parse_dgp(&["n".into()], 0).is_err());
        assert!(parse_dgp(&["p1=4".into()], 0).is_err());
        assert!(parse_dgp(&["rho=1.5".into()], 0).is_err());
    }

    #[test]
    fn usage_errors_exit_2() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(run(["scents", "frobnicate"], &mut o, &mut e), 2);
        assert_eq!(run(["scents", "fit"], &mut o, &mut e), 2);
        assert_eq!(run(["scents", "fit-hd", "--input", "x.csv", "--lambda-mode", "magic"], &mut o, &mut e), 2);
    }

    #[test]
    fn error_object_is_structured() {
        let v = error_json(&Error::SingularDesign {
            context: "t".into(),
            condition: 1e15,
            columns: vec![2],
        });
        assert_eq!(v["error"]["kind"], "singular_design");
        assert_eq!(v["error"]["columns"][0], 2);
    }
}
