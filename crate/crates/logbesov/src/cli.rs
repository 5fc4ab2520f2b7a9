//! Command-line front end: one subcommand per operation, JSON/CSV/LBF outputs and a run
//! manifest with SHA-256 digests of every file written.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::besov_norms::{block_norms, heat_char_norm, parse_exponent, sigma_q, BesovParams, HeatCharParams};
use crate::core_field::{io, GridSpec, SpectralField};
use crate::error::{Error, Result};
use crate::inflation::{
    build_initial_data, geometric_audit, remainder_experiment, scaling_experiment, support_audit, ExperimentConfig,
    InflationReport, RemainderReport,
};
use crate::littlewood_paley::decompose;
use crate::navier_stokes::{
    bilinear_xnorm_report, divergence_defect, heat, heat_trajectory, leray, picard_solve, random_divergence_free,
    rk4_reference, taylor_green, xnorm, Trajectory,
};
use crate::path_norms::{
    builtin_bilinear_family, builtin_family, inequality_check, log_weight, Inequality, KatoParams, TimeGrid,
    TimeSeries, DEFAULT_MIN_RATIO,
};

/// Picard tolerance used for the remainder sweep.
pub const REMAINDER_TOL: f64 = 1e-13;

#[derive(Debug, Parser, Serialize)]
#[command(name = "logbesov", version, about = "Log-refined Besov norms, Kato path norms and mild Navier-Stokes solutions")]
pub struct Cli {
    /// Worker threads (falls back to LOGBESOV_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Manifest path (default: next to the first output, else stderr).
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Besov norm of a field, optionally with the heat characterization.
    Norm(NormArgs),
    /// Write S_0 and every block as field files plus a CSV of block norms.
    LpDecompose(DecomposeArgs),
    /// Apply the heat semigroup.
    Heat(HeatArgs),
    /// Leray projection.
    Project(ProjectArgs),
    /// Mild solution by Picard iteration or the RK4 reference.
    Solve(SolveArgs),
    /// Bilinear Duhamel ratio on heat trajectories.
    BilinearCheck(BilinearArgs),
    /// Scalar path-norm inequalities on a test family.
    IneqCheck(IneqArgs),
    /// Norm-inflation scaling or remainder experiment.
    Inflate(InflateArgs),
    /// Support audit of an inflation configuration.
    Audit(AuditArgs),
    /// Generate a field file.
    Field(FieldArgs),
}

fn exponent(s: &str) -> std::result::Result<f64, String> {
    parse_exponent(s).map_err(|e| e.to_string())
}

fn ser_exp<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    crate::inflation::exponent::serialize(v, s)
}

fn ser_opt_exp<S: serde::Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) => crate::inflation::exponent::serialize(x, s),
        None => s.serialize_none(),
    }
}

/// Flags that replace the matching config fields.
#[derive(Debug, Default, Args, Serialize)]
pub struct ConfigOverrides {
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_parser = exponent)]
    #[serde(serialize_with = "ser_opt_exp")]
    pub q: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sigma_list: Option<Vec<f64>>,
    /// Preset range `lo,hi`.
    #[arg(long, value_delimiter = ',')]
    pub m_range: Option<Vec<usize>>,
}

impl ConfigOverrides {
    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(v) = self.eps {
            cfg.eps = v;
        }
        if let Some(v) = self.delta {
            cfg.delta = Some(v);
        }
        if let Some(v) = self.q {
            cfg.q = v;
        }
        if let Some(v) = &self.sigma_list {
            cfg.sigma_list = v.clone();
        }
        if let Some(v) = &self.m_range {
            let [lo, hi] = v.as_slice() else {
                return Err(Error::Invalid("--m-range takes two values".into()));
            };
            cfg.m_range = Some([*lo, *hi]);
        }
        Ok(())
    }
}

#[derive(Debug, Args, Serialize)]
pub struct NormArgs {
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub s: f64,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, value_parser = exponent)]
    #[serde(serialize_with = "ser_exp")]
    pub p: f64,
    #[arg(long, value_parser = exponent)]
    #[serde(serialize_with = "ser_exp")]
    pub q: f64,
    /// Restrict to these blocks (comma separated); the low-frequency term is dropped.
    #[arg(long, value_delimiter = ',')]
    pub blocks: Option<Vec<usize>>,
    #[arg(long)]
    pub jmax: Option<usize>,
    /// Also evaluate the heat-semigroup characterization.
    #[arg(long)]
    pub heat: bool,
    #[arg(long, default_value_t = 1.0)]
    pub t0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
    /// Write the JSON record here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long)]
    pub out_prefix: PathBuf,
    #[arg(long, value_parser = exponent, default_value = "inf")]
    #[serde(serialize_with = "ser_exp")]
    pub p: f64,
    #[arg(long)]
    pub jmax: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct HeatArgs {
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long)]
    pub t: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ProjectArgs {
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Picard,
    Rk4,
}

#[derive(Debug, Args, Serialize)]
pub struct SolveArgs {
    #[arg(long)]
    pub u0: PathBuf,
    #[arg(long = "T")]
    pub horizon: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, value_parser = exponent, default_value = "inf")]
    #[serde(serialize_with = "ser_exp")]
    pub q: f64,
    #[arg(long, value_enum, default_value_t = Method::Picard)]
    pub method: Method,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 60)]
    pub maxiter: usize,
    /// Nodes per decade of the log time grid (Picard).
    #[arg(long, default_value_t = 16)]
    pub density: usize,
    /// Time step (RK4).
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Write every snapshot, not only the final one.
    #[arg(long)]
    pub all_snapshots: bool,
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct BilinearArgs {
    #[arg(long)]
    pub u: PathBuf,
    /// Second field (default: the first).
    #[arg(long)]
    pub v: Option<PathBuf>,
    #[arg(long = "T")]
    pub horizon: f64,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long, value_parser = exponent)]
    #[serde(serialize_with = "ser_exp")]
    pub q: f64,
    #[arg(long, default_value_t = 8)]
    pub density: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lemma {
    Hardy,
    Damped,
    Bilinear,
}

#[derive(Debug, Args, Serialize)]
pub struct IneqArgs {
    #[arg(long, value_enum)]
    pub lemma: Lemma,
    #[arg(long, value_parser = exponent)]
    #[serde(serialize_with = "ser_exp")]
    pub q: f64,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    /// `builtin` or `csv:<path>` (first column node times, one series per further column).
    #[arg(long, default_value = "builtin")]
    pub family: String,
    #[arg(long, default_value_t = 1.0)]
    pub horizon: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct InflateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the full report as JSON.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

#[derive(Debug, Args, Serialize)]
pub struct AuditArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Include the sign-structure check (evaluates the resonant spectrum).
    #[arg(long)]
    pub sign: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    TaylorGreen,
    Random,
    Inflation,
}

#[derive(Debug, Args, Serialize)]
pub struct FieldArgs {
    #[arg(long, value_enum)]
    pub kind: FieldKind,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 64)]
    pub size: usize,
    #[arg(long, default_value_t = 1.0)]
    pub amp: f64,
    #[arg(long, default_value_t = 8.0)]
    pub kmax: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Inflation configuration (first family member is used).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct OutputDigest {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    subcommand: &'a str,
    parameters: Value,
    tool_version: &'static str,
    grid: Option<Value>,
    started_unix_seconds: u64,
    wall_time_seconds: f64,
    exit_code: i32,
    error: Option<String>,
    outputs: Vec<OutputDigest>,
}

/// Outputs produced so far and the grid they live on.
#[derive(Default)]
struct Run {
    outputs: Vec<PathBuf>,
    grid: Option<Value>,
}

impl Run {
    fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, bytes)?;
        self.outputs.push(path.to_path_buf());
        Ok(())
    }

    fn json(&mut self, path: Option<&Path>, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(e.to_string()))?;
        text.push('\n');
        match path {
            Some(p) => self.write(p, text.as_bytes()),
            None => {
                std::io::stdout().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }

    fn field(&mut self, path: &Path, f: &SpectralField) -> Result<()> {
        self.write(path, &io::encode(f))
    }

    fn csv(&mut self, path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| Error::Numerical(e.to_string());
        w.write_record(header).map_err(fail)?;
        for r in rows {
            w.write_record(r).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Numerical(e.to_string()))?;
        self.write(path, &bytes)
    }

    fn grid(&mut self, g: &GridSpec) {
        self.grid = Some(json!({"n": g.n, "size": g.size, "length": g.length}));
    }
}

fn num(v: f64) -> String {
    let a = v.abs();
    if v.is_infinite() && v > 0.0 {
        "inf".into()
    } else if a == 0.0 || !a.is_finite() || (1e-4..1e6).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn load(path: &Path, run: &mut Run) -> Result<SpectralField> {
    let f = io::load(path)?;
    run.grid(f.grid());
    Ok(f)
}

/// A computation finished but reported a failure (exit code 2) after writing its outputs.
struct Reported(String);

type Outcome = Result<Option<Reported>>;

fn norm(a: &NormArgs, run: &mut Run) -> Outcome {
    let u = load(&a.field, run)?;
    let mut params = BesovParams::new(a.s, a.sigma, a.p, a.q)?;
    let cap = u.grid().default_jmax();
    let jmax = a.jmax.unwrap_or(cap);
    params = params.with_jmax(jmax);
    params.validate()?;
    if jmax > cap {
        return Err(Error::Invalid(format!("jmax {jmax} exceeds grid capacity {cap}")));
    }
    let u = u.spectral()?;
    let pieces = decompose(&u, jmax)?;
    let mut rest = u.clone();
    for p in &pieces {
        rest = rest.sub(p)?;
    }
    let truncation = rest.lp_norm(a.p)?;
    let (low, blocks) = block_norms(&u, a.p, jmax)?;
    let weight = |j: usize| (j as f64 * a.s).exp2() * (j as f64).powf(a.sigma);
    let selected: Vec<usize> = match &a.blocks {
        Some(b) => {
            if let Some(&j) = b.iter().find(|&&j| j == 0 || j > jmax) {
                return Err(Error::Invalid(format!("block {j} outside 1..={jmax}")));
            }
            b.clone()
        }
        None => (1..=jmax).collect(),
    };
    let rows: Vec<Value> = selected
        .iter()
        .map(|&j| json!({"j": j, "block_norm": blocks[j - 1], "contribution": weight(j) * blocks[j - 1]}))
        .collect();
    let terms: Vec<f64> = selected.iter().map(|&j| weight(j) * blocks[j - 1]).collect();
    let sum = crate::besov_norms::lq_sum(&terms, a.q);
    let value = if a.blocks.is_some() { sum } else { low + sum };
    let mut record = json!({
        "field": a.field.display().to_string(),
        "s": a.s,
        "sigma": a.sigma,
        "p": num(a.p),
        "q": num(a.q),
        "jmax": jmax,
        "restricted": a.blocks.is_some(),
        "norm": value,
        "low": if a.blocks.is_some() { Value::Null } else { json!(low) },
        "blocks": rows,
        "truncation_residual": truncation,
        "sigma_q": sigma_q(a.q)?,
    });
    if a.heat {
        let hc = HeatCharParams::new(a.t0, a.gamma)?;
        let h = heat_char_norm(&u, &params, &hc)?;
        record["heat_char"] = json!({"t0": a.t0, "gamma": a.gamma, "norm": h, "ratio": h / value});
    }
    run.json(a.out.as_deref(), &record)?;
    Ok(None)
}

fn lp_decompose(a: &DecomposeArgs, run: &mut Run) -> Outcome {
    let u = load(&a.field, run)?.spectral()?;
    let cap = u.grid().default_jmax();
    let jmax = a.jmax.unwrap_or(cap);
    if jmax == 0 || jmax > cap {
        return Err(Error::Invalid(format!("jmax {jmax} outside 1..={cap}")));
    }
    let pieces = decompose(&u, jmax)?;
    let mut rows = Vec::with_capacity(pieces.len());
    for (j, piece) in pieces.iter().enumerate() {
        let name = if j == 0 { "s0".to_string() } else { format!("j{j}") };
        run.field(&with_suffix(&a.out_prefix, &format!("_{name}.lbf")), piece)?;
        rows.push(vec![name, j.to_string(), num(a.p), num(piece.lp_norm(a.p)?)]);
    }
    run.csv(&with_suffix(&a.out_prefix, "_blocks.csv"), &["block", "j", "p", "lp_norm"], &rows)?;
    Ok(None)
}

fn heat_cmd(a: &HeatArgs, run: &mut Run) -> Outcome {
    let u = load(&a.field, run)?;
    let h = heat(&u.spectral()?, a.t)?;
    run.field(&a.out, &h)?;
    Ok(None)
}

fn project(a: &ProjectArgs, run: &mut Run) -> Outcome {
    let u = load(&a.field, run)?;
    let p = leray(&u.spectral()?)?;
    run.field(&a.out, &p)?;
    eprintln!(
        "divergence defect {:.3e} -> {:.3e}",
        divergence_defect(&u.spectral()?),
        divergence_defect(&p)
    );
    Ok(None)
}

fn series_rows(traj: &Trajectory, sigma: f64, horizon: f64) -> Result<Vec<Vec<String>>> {
    traj.times
        .iter()
        .zip(&traj.snapshots)
        .map(|(&t, s)| {
            let sup = s.lp_norm(f64::INFINITY)?;
            let w = if t > 0.0 { t.sqrt() * log_weight(t, horizon).powf(sigma) * sup } else { 0.0 };
            Ok(vec![num(t), num(sup), num(w), num(s.energy_coefficients())])
        })
        .collect()
}

fn solve(a: &SolveArgs, run: &mut Run) -> Outcome {
    let u0 = load(&a.u0, run)?.spectral()?;
    let kp = KatoParams::new(a.sigma, a.q, a.horizon)?;
    let (traj, diagnostics, failure) = match a.method {
        Method::Picard => {
            let times = TimeGrid::log_spaced(a.horizon, a.density, DEFAULT_MIN_RATIO)?;
            let (traj, diag) = picard_solve(&u0, &times, &kp, a.tol, a.maxiter)?;
            let failure = (!diag.converged).then(|| Reported(format!("Picard iteration failed: {}", diag.reason)));
            let v = serde_json::to_value(&diag).map_err(|e| Error::Numerical(e.to_string()))?;
            (traj, v, failure)
        }
        Method::Rk4 => {
            let traj = rk4_reference(&u0, a.horizon, a.dt)?;
            (traj, json!({"dt": a.dt, "steps": (a.horizon / a.dt).round()}), None)
        }
    };
    let xn = match (&a.method, &traj.timegrid) {
        (Method::Picard, Some(_)) => Some(xnorm(&traj, &kp)?),
        _ => None,
    };
    let record = json!({
        "u0": a.u0.display().to_string(),
        "method": a.method,
        "T": a.horizon,
        "sigma": a.sigma,
        "q": num(a.q),
        "tol": a.tol,
        "xnorm": xn,
        "final_sup": traj.last().lp_norm(f64::INFINITY)?,
        "final_divergence_defect": divergence_defect(traj.last()),
        "solver": diagnostics,
    });
    run.json(Some(&with_suffix(&a.out_prefix, "_diagnostics.json")), &record)?;
    run.csv(
        &with_suffix(&a.out_prefix, "_series.csv"),
        &["t", "sup_norm", "weighted_sup", "energy"],
        &series_rows(&traj, a.sigma, a.horizon)?,
    )?;
    if a.all_snapshots {
        for (i, s) in traj.snapshots.iter().enumerate() {
            run.field(&with_suffix(&a.out_prefix, &format!("_s{i:04}.lbf")), s)?;
        }
    }
    run.field(&with_suffix(&a.out_prefix, "_final.lbf"), traj.last())?;
    Ok(failure)
}

fn bilinear_check(a: &BilinearArgs, run: &mut Run) -> Outcome {
    let u = load(&a.u, run)?.spectral()?;
    let v = match &a.v {
        Some(p) => io::load(p)?.spectral()?,
        None => u.clone(),
    };
    let times = TimeGrid::log_spaced(a.horizon, a.density, DEFAULT_MIN_RATIO)?;
    let kp = KatoParams::new(a.sigma, a.q, a.horizon)?;
    let hu = heat_trajectory(&u, &times)?;
    let hv = heat_trajectory(&v, &times)?;
    let report = bilinear_xnorm_report(&hu, &hv, &kp)?;
    run.json(a.out.as_deref(), &json!({"T": a.horizon, "density": a.density, "report": report}))?;
    Ok(None)
}

fn read_family(spec: &str, horizon: f64) -> Result<Vec<TimeSeries>> {
    if spec == "builtin" {
        let grid = TimeGrid::new(horizon)?;
        return Ok(builtin_family(&grid));
    }
    let path = spec
        .strip_prefix("csv:")
        .ok_or_else(|| Error::Invalid(format!("family must be builtin or csv:<path>, got {spec:?}")))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Invalid(e.to_string()))?;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Invalid(e.to_string()))?;
        if columns.is_empty() {
            columns = vec![Vec::new(); rec.len()];
        }
        if rec.len() != columns.len() {
            return Err(Error::Invalid("ragged family CSV".into()));
        }
        for (c, field) in columns.iter_mut().zip(rec.iter()) {
            c.push(field.trim().parse().map_err(|_| Error::Invalid(format!("not a number: {field:?}")))?);
        }
    }
    if columns.len() < 2 {
        return Err(Error::Invalid("family CSV needs a time column and at least one series".into()));
    }
    let grid = TimeGrid::from_nodes(&columns[0])?;
    columns[1..].iter().map(|c| TimeSeries::new(grid.clone(), c.clone())).collect()
}

fn ineq_check(a: &IneqArgs, run: &mut Run) -> Outcome {
    let family = read_family(&a.family, a.horizon)?;
    let kind = match a.lemma {
        Lemma::Hardy => Inequality::Hardy,
        Lemma::Damped => Inequality::Damped,
        Lemma::Bilinear => Inequality::Bilinear,
    };
    let report = if matches!(kind, Inequality::Bilinear) && a.family == "builtin" {
        let pairs = builtin_bilinear_family(&TimeGrid::new(a.horizon)?);
        inequality_check(kind, &[], Some(&pairs), a.sigma, a.q)?
    } else {
        inequality_check(kind, &family, None, a.sigma, a.q)?
    };
    run.json(a.out.as_deref(), &json!({"family": a.family, "horizon": a.horizon, "report": report}))?;
    let failure = (report.violations > 0).then(|| Reported(format!("{} violations", report.violations)));
    Ok(failure)
}

fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("bad config {}: {e}", path.display())))
}

fn scaling_rows(r: &InflationReport) -> Vec<Vec<String>> {
    r.rows
        .iter()
        .map(|row| {
            let fit = r.fit(row.sigma);
            vec![
                row.m.to_string(),
                num(row.sigma),
                num(row.q),
                num(row.t_star),
                num(row.norm_u0),
                num(row.main),
                num(row.cross),
                num(row.pressure),
                num(row.full_solution_norm),
                num(fit.map_or(f64::NAN, |f| f.slope)),
                num(fit.map_or(f64::NAN, |f| f.residual)),
                num(fit.map_or(f64::NAN, |f| f.predicted)),
                r.variant.as_str().to_string(),
                num(r.eps),
                num(r.delta),
            ]
        })
        .collect()
}

fn remainder_rows(r: &RemainderReport, cfg: &ExperimentConfig) -> Vec<Vec<String>> {
    r.rows
        .iter()
        .map(|row| {
            vec![
                num(row.delta),
                num(row.remainder),
                row.iterations.to_string(),
                row.converged.to_string(),
                num(r.t),
                num(r.slope),
                num(r.residual),
                num(cfg.eps),
                num(cfg.q),
            ]
        })
        .collect()
}

fn inflate(a: &InflateArgs, run: &mut Run) -> Outcome {
    let mut cfg = read_config(&a.config)?;
    a.overrides.apply(&mut cfg)?;
    let family = cfg.family()?;
    match &cfg.delta_sweep {
        Some(deltas) => {
            let [one] = family.as_slice() else {
                return Err(Error::Invalid("the remainder experiment takes a single configuration".into()));
            };
            let size = one.size.unwrap_or(32) as usize;
            let grid = GridSpec::periodic(3, size)?;
            run.grid(&grid);
            let report = remainder_experiment(one, grid, deltas, REMAINDER_TOL)?;
            run.csv(
                &a.out,
                &["delta", "remainder", "iterations", "converged", "t", "slope_fit", "slope_residual", "eps", "q"],
                &remainder_rows(&report, &cfg),
            )?;
            if let Some(p) = &a.report {
                run.json(Some(p), &report)?;
            }
        }
        None => {
            let report = scaling_experiment(&family, &cfg.sigma_list)?;
            run.grid = Some(json!({"virtual": true, "sizes": family.iter().map(|c| c.size).collect::<Vec<_>>()}));
            run.csv(
                &a.out,
                &[
                    "m",
                    "sigma",
                    "q",
                    "t_star",
                    "norm_u0",
                    "main",
                    "cross",
                    "pressure",
                    "full_solution_norm",
                    "slope_fit",
                    "slope_residual",
                    "predicted_slope",
                    "variant",
                    "eps",
                    "delta",
                ],
                &scaling_rows(&report),
            )?;
            if let Some(p) = &a.report {
                run.json(Some(p), &report)?;
            }
        }
    }
    Ok(None)
}

fn audit(a: &AuditArgs, run: &mut Run) -> Outcome {
    let mut cfg = read_config(&a.config)?;
    a.overrides.apply(&mut cfg)?;
    let family = cfg.family()?;
    let reports: Vec<Value> = family
        .iter()
        .map(|c| {
            let r = if a.sign { support_audit(c) } else { geometric_audit(c) };
            json!({"m": c.m(), "K_A": c.k_a, "K_B": c.k_b, "audit": r})
        })
        .collect();
    let pass = reports.iter().all(|r| r["audit"]["pass"] == json!(true));
    run.json(a.out.as_deref(), &json!({"pass": pass, "configurations": reports}))?;
    Ok(None)
}

fn field(a: &FieldArgs, run: &mut Run) -> Outcome {
    let f = match a.kind {
        FieldKind::TaylorGreen => taylor_green(GridSpec::periodic(a.n, a.size)?, a.amp)?,
        FieldKind::Random => random_divergence_free(GridSpec::periodic(a.n, a.size)?, a.kmax, a.amp, a.seed)?,
        FieldKind::Inflation => {
            let path = a.config.as_ref().ok_or_else(|| Error::Invalid("--config is required for inflation data".into()))?;
            let cfg = read_config(path)?;
            let first = cfg.family()?.into_iter().next().ok_or_else(|| Error::Invalid("empty family".into()))?;
            let grid = GridSpec::periodic(3, a.size)?;
            build_initial_data(&first, grid)?.scaled(first.delta)
        }
    };
    run.grid(f.grid());
    run.field(&a.out, &f)?;
    Ok(None)
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn configure_threads(requested: Option<usize>) -> Result<()> {
    let n = match requested {
        Some(n) => Some(n),
        None => match std::env::var("LOGBESOV_THREADS") {
            Ok(v) => Some(v.trim().parse().map_err(|_| Error::Invalid(format!("LOGBESOV_THREADS={v:?}")))?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(Error::Invalid("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Invalid(e.to_string()))?;
    }
    Ok(())
}

fn dispatch(cli: &Cli, run: &mut Run) -> Outcome {
    configure_threads(cli.threads)?;
    match &cli.command {
        Command::Norm(a) => norm(a, run),
        Command::LpDecompose(a) => lp_decompose(a, run),
        Command::Heat(a) => heat_cmd(a, run),
        Command::Project(a) => project(a, run),
        Command::Solve(a) => solve(a, run),
        Command::BilinearCheck(a) => bilinear_check(a, run),
        Command::IneqCheck(a) => ineq_check(a, run),
        Command::Inflate(a) => inflate(a, run),
        Command::Audit(a) => audit(a, run),
        Command::Field(a) => field(a, run),
    }
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Norm(_) => "norm",
        Command::LpDecompose(_) => "lp-decompose",
        Command::Heat(_) => "heat",
        Command::Project(_) => "project",
        Command::Solve(_) => "solve",
        Command::BilinearCheck(_) => "bilinear-check",
        Command::IneqCheck(_) => "ineq-check",
        Command::Inflate(_) => "inflate",
        Command::Audit(_) => "audit",
        Command::Field(_) => "field",
    }
}

/// Runs a parsed command line, writes the manifest and returns the exit code.
pub fn execute(cli: &Cli) -> i32 {
    let started = Instant::now();
    let unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let mut run = Run::default();
    let outcome = dispatch(cli, &mut run);
    let (code, error) = match &outcome {
        Ok(None) => (0, None),
        Ok(Some(Reported(msg))) => (2, Some(msg.clone())),
        Err(e) if e.is_numerical() => (2, Some(e.to_string())),
        Err(e) => (1, Some(e.to_string())),
    };
    if let Some(msg) = &error {
        eprintln!("error: {msg}");
    }
    let outputs = run
        .outputs
        .iter()
        .map(|p| OutputDigest {
            path: p.display().to_string(),
            sha256: fs::read(p).map(|b| sha256_hex(&b)).unwrap_or_default(),
        })
        .collect();
    let parameters = serde_json::to_value(&cli.command)
        .ok()
        .and_then(|v| v.as_object().and_then(|o| o.values().next().cloned()))
        .unwrap_or(Value::Null);
    let manifest = RunManifest {
        subcommand: subcommand_name(&cli.command),
        parameters,
        tool_version: env!("CARGO_PKG_VERSION"),
        grid: run.grid.clone(),
        started_unix_seconds: unix,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        exit_code: code,
        error,
        outputs,
    };
    let text = serde_json::to_string_pretty(&manifest).unwrap_or_default() + "\n";
    let target = cli.manifest.clone().or_else(|| run.outputs.first().map(|p| with_suffix(p, ".manifest.json")));
    match target {
        Some(p) => {
            if let Err(e) = fs::write(&p, &text) {
                eprintln!("error: cannot write manifest {}: {e}", p.display());
                return if code == 0 { 1 } else { code };
            }
        }
        None => eprint!("{text}"),
    }
    code
}

/// Parses `argv` and runs it; usage errors exit with 1, help and version with 0.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            code
        }
    }
}
