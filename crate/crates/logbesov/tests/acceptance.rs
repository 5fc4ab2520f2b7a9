//! Acceptance suite: one pass/fail line per criterion, tolerances fixed below.

use std::process::Command;
use std::time::{Duration, Instant};

use logbesov::besov_norms::{besov_norm, heat_char_norm, sigma_q, BesovParams, HeatCharParams};
use logbesov::core_field::{io, random_field, GridSpec, SpectralField};
use logbesov::inflation::{
    desk_family, initial_data_norms, remainder_experiment, scaling_experiment, InflationConfig, InflationReport,
    Variant,
};
use logbesov::littlewood_paley::partition_residual;
use logbesov::navier_stokes::{leray, nonlinear, picard_solve, random_divergence_free, rk4_reference, taylor_green};
use logbesov::path_norms::{builtin_bilinear_family, builtin_family, inequality_check, Inequality, KatoParams, TimeGrid};
use num_complex::Complex64;

const PARTITION_TOL: f64 = 1e-10;
const PARTITION_TIME: Duration = Duration::from_secs(1);
const LERAY_TOL: f64 = 1e-12;
const TG_NONLINEAR_TOL: f64 = 1e-12;
const TG_DECAY_TOL: f64 = 1e-10;
const TG_TIME: Duration = Duration::from_secs(10);
const CROSS_TOL: f64 = 1e-4;
const CROSS_TIME: Duration = Duration::from_secs(60);
const EQUIV_SPREAD: f64 = 50.0;
const EQUIV_STABILITY: f64 = 0.10;
const INEQ_TIME: Duration = Duration::from_secs(30);
const PLATEAU_FACTOR: f64 = 2.0;
const SLOPE_TOL: f64 = 0.25;
const SCALING_TIME: Duration = Duration::from_secs(600);
const BOUNDARY_TOL: f64 = 0.15;
const CUBIC_SLOPE: f64 = 3.0;
const CUBIC_TOL: f64 = 0.3;

const EPS: f64 = 0.125;
const SIZES: [usize; 5] = [2, 3, 4, 5, 6];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Check = logbesov::Result<Outcome>;

fn partition() -> Check {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (n, size) in [(2, 64), (2, 256), (3, 64)] {
        let g = GridSpec::periodic(n, size)?;
        worst = worst.max(partition_residual(&g, g.default_jmax()));
    }
    let took = start.elapsed();
    Ok(outcome(
        worst <= PARTITION_TOL && took < PARTITION_TIME,
        format!("max residual {worst:.2e} in {:.3} s", took.as_secs_f64()),
    ))
}

fn sigma_q_values() -> Check {
    let got = [sigma_q(1.0)?, sigma_q(2.0)?, sigma_q(4.0)?, sigma_q(f64::INFINITY)?];
    Ok(outcome(got == [1.0, 0.5, 0.75, 1.0], format!("{got:?}")))
}

fn gradient(phi: &SpectralField, n: usize) -> logbesov::Result<SpectralField> {
    let parts = (0..n)
        .map(|c| phi.apply_multiplier(|xi| Complex64::new(0.0, xi[c])))
        .collect::<logbesov::Result<Vec<_>>>()?;
    SpectralField::stack(&parts)
}

fn leray_checks() -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let n = if seed % 2 == 0 { 2 } else { 3 };
        let g = GridSpec::periodic(n, if n == 2 { 32 } else { 16 })?;
        let u = random_field(g, n, 6.0, 1.0, seed);
        let p = leray(&u)?;
        worst = worst.max(leray(&p)?.sub(&p)?.max_abs() / p.max_abs());
        let grad = gradient(&random_field(g, 1, 6.0, 1.0, 1000 + seed), n)?;
        worst = worst.max(leray(&grad)?.max_abs() / grad.max_abs());
    }
    Ok(outcome(worst <= LERAY_TOL, format!("worst relative defect {worst:.2e} over 50 fields")))
}

fn taylor_green_oracle() -> Check {
    let start = Instant::now();
    let g = GridSpec::periodic(2, 128)?;
    let u0 = taylor_green(g, 1.0)?;
    let nl = nonlinear(&u0)?.max_abs();
    let horizon = 0.5;
    let times = TimeGrid::new(horizon)?;
    let (traj, _) = picard_solve(&u0, &times, &KatoParams::new(1.0, f64::INFINITY, horizon)?, 1e-12, 20)?;
    let exact = u0.scaled((-2.0 * horizon).exp());
    let err = traj.last().sub(&exact)?.max_abs() / exact.max_abs();
    let took = start.elapsed();
    Ok(outcome(
        nl <= TG_NONLINEAR_TOL && err <= TG_DECAY_TOL && took < TG_TIME,
        format!("|N(TG)| {nl:.2e}, decay error {err:.2e}, {:.2} s", took.as_secs_f64()),
    ))
}

fn solver_cross_validation() -> Check {
    let start = Instant::now();
    let g = GridSpec::periodic(2, 64)?;
    let horizon = 0.1;
    let times = TimeGrid::new(horizon)?;
    let kp = KatoParams::new(1.0, 2.0, horizon)?;
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let u0 = random_divergence_free(g, 8.0, 1.0, seed)?;
        let (traj, diag) = picard_solve(&u0, &times, &kp, 1e-12, 60)?;
        if !diag.converged {
            return Ok(outcome(false, format!("seed {seed} did not converge: {}", diag.reason)));
        }
        let rk = rk4_reference(&u0, horizon, 1e-3)?;
        let d = traj.last().sub(rk.last())?.lp_norm(f64::INFINITY)? / rk.last().lp_norm(f64::INFINITY)?;
        worst = worst.max(d);
    }
    let took = start.elapsed();
    Ok(outcome(
        worst <= CROSS_TOL && took < CROSS_TIME,
        format!("worst relative sup discrepancy {worst:.2e}, {:.1} s", took.as_secs_f64()),
    ))
}

fn bracket(params: &BesovParams, hc: &HeatCharParams, fields: &[SpectralField]) -> logbesov::Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for u in fields {
        let r = heat_char_norm(u, params, hc)? / besov_norm(u, params)?;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}

fn norm_equivalence() -> Check {
    let g = GridSpec::periodic(2, 64)?;
    let fields: Vec<SpectralField> = (0..20).map(|s| random_field(g, 1, 20.0, 1.0, 500 + s)).collect();
    let coarse = HeatCharParams::new(1.0, 0.0)?;
    let fine = HeatCharParams { grid: coarse.grid.refined(), ..coarse.clone() };
    let mut pass = true;
    let mut detail = Vec::new();
    for (sigma, q) in [(1.0, f64::INFINITY), (0.5, 2.0)] {
        let params = BesovParams::new(-1.0, sigma, f64::INFINITY, q)?;
        let (lo, hi) = bracket(&params, &coarse, &fields)?;
        let (lo2, hi2) = bracket(&params, &fine, &fields)?;
        let drift = ((lo2 - lo) / lo).abs().max(((hi2 - hi) / hi).abs());
        pass &= hi / lo <= EQUIV_SPREAD && drift <= EQUIV_STABILITY;
        detail.push(format!("(σ={sigma}, q={q}) bracket [{lo:.4}, {hi:.4}] spread {:.3} drift {drift:.1e}", hi / lo));
    }
    Ok(outcome(pass, detail.join("; ")))
}

fn inequality_suites() -> Check {
    let start = Instant::now();
    let grid = TimeGrid::new(1.0)?;
    let family = builtin_family(&grid);
    let pairs = builtin_bilinear_family(&grid);
    let mut violations = 0;
    let mut detail = Vec::new();
    for q in [2.0, 4.0, f64::INFINITY] {
        let r = inequality_check(Inequality::Hardy, &family, None, 0.0, q)?;
        violations += r.violations;
        detail.push(format!("hardy q={q} C={:.3}", r.measured_constant));
    }
    for q in [1.0, 2.0, f64::INFINITY] {
        let r = inequality_check(Inequality::Damped, &family, None, 0.0, q)?;
        violations += r.violations;
        detail.push(format!("damped q={q} C={:.3}", r.measured_constant));
    }
    for (sigma, q) in [(1.0, 1.0), (1.0, f64::INFINITY), (0.5, 2.0), (0.75, 2.0)] {
        let r = inequality_check(Inequality::Bilinear, &[], Some(&pairs), sigma, q)?;
        violations += r.violations + usize::from(!r.guaranteed);
        detail.push(format!("bilinear (σ={sigma},q={q}) C={:.3}", r.measured_constant));
    }
    let took = start.elapsed();
    Ok(outcome(
        violations == 0 && took < INEQ_TIME,
        format!("{violations} violations, {:.1} s; {}", took.as_secs_f64(), detail.join(", ")),
    ))
}

fn plateau() -> Check {
    let mut pass = true;
    let mut detail = Vec::new();
    for (sigma, q) in [(0.0, f64::INFINITY), (0.5, 2.0), (0.75, 4.0)] {
        let mut first = Vec::new();
        let mut second = Vec::new();
        for m in SIZES {
            let (a, b) = initial_data_norms(&InflationConfig::desk(Variant::Main, m, EPS, sigma, q)?)?;
            first.push(a);
            second.push(b);
        }
        for (name, v) in [("u1", &first), ("u2", &second)] {
            let hi = v.iter().cloned().fold(0.0, f64::max);
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            pass &= hi / lo <= PLATEAU_FACTOR;
            detail.push(format!("(σ={sigma},q={q}) {name} max/min {:.4}", hi / lo));
        }
    }
    Ok(outcome(pass, detail.join(", ")))
}

struct Sweeps {
    inf: InflationReport,
    q4: InflationReport,
    took: Duration,
}

fn sweeps(eps: f64) -> logbesov::Result<Sweeps> {
    let start = Instant::now();
    let inf = scaling_experiment(&desk_family(Variant::Main, &SIZES, eps, f64::INFINITY)?, &[0.0, 0.5, 1.0, 1.25])?;
    let q4 = scaling_experiment(&desk_family(Variant::Main, &SIZES, eps, 4.0)?, &[0.25, 0.5, 0.75, 1.0])?;
    Ok(Sweeps { inf, q4, took: start.elapsed() })
}

fn scaling(s: &Sweeps) -> Check {
    let mut pass = s.took < SCALING_TIME;
    let mut detail = Vec::new();
    for (report, sigma) in [(&s.inf, 0.0), (&s.q4, 0.25)] {
        let fit = report.fit(sigma).expect("sigma in sweep");
        pass &= (fit.slope - fit.predicted).abs() <= SLOPE_TOL;
        detail.push(format!(
            "(σ={sigma}, q={}) slope {:.4} vs {:.4}",
            report.q, fit.slope, fit.predicted
        ));
    }
    Ok(outcome(pass, format!("{}; both sweeps {:.1} s", detail.join(", "), s.took.as_secs_f64())))
}

fn phase_boundary(s: &Sweeps) -> Check {
    let mut pass = true;
    let mut detail = Vec::new();
    for report in [&s.inf, &s.q4] {
        let critical = sigma_q(report.q)?;
        for fit in &report.fits {
            let ok = if fit.sigma < critical {
                fit.slope > 0.0
            } else if fit.sigma == critical {
                fit.slope.abs() <= BOUNDARY_TOL
            } else {
                fit.slope <= 0.0
            };
            pass &= ok;
            detail.push(format!("q={} σ={} slope {:+.3}", report.q, fit.sigma, fit.slope));
        }
    }
    Ok(outcome(pass, detail.join(", ")))
}

fn hierarchy(all: &[&Sweeps]) -> Check {
    let mut pass = true;
    let mut worst_cross: f64 = 0.0;
    let mut worst_pressure: f64 = 0.0;
    for s in all {
        for report in [&s.inf, &s.q4] {
            for fit in &report.fits {
                let rows = report.rows_for(fit.sigma);
                for r in &rows {
                    pass &= r.cross < r.main && r.pressure < r.main;
                    worst_cross = worst_cross.max(r.cross / r.main);
                    worst_pressure = worst_pressure.max(r.pressure / r.main);
                }
                pass &= rows.windows(2).all(|w| w[1].cross / w[1].main < w[0].cross / w[0].main);
            }
        }
    }
    Ok(outcome(
        pass,
        format!("max cross/main {worst_cross:.2e}, max pressure/main {worst_pressure:.2e}, eps in {{1/8, 1/16}}"),
    ))
}

fn remainder() -> Check {
    let cfg = InflationConfig::dense_companion(0.25)?;
    let r = remainder_experiment(&cfg, GridSpec::periodic(3, 32)?, &[1e-3, 2e-3, 4e-3, 8e-3], 1e-13)?;
    Ok(outcome(
        (r.slope - CUBIC_SLOPE).abs() <= CUBIC_TOL,
        format!("slope {:.4} (residual {:.1e})", r.slope, r.residual),
    ))
}

fn run_cli(args: &[&str]) -> std::io::Result<i32> {
    let status = Command::new(env!("CARGO_BIN_EXE_logbesov")).args(args).status()?;
    Ok(status.code().unwrap_or(-1))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir()?;
    let p = |name: &str| dir.path().join(name).display().to_string();
    let u = random_field(GridSpec::periodic(3, 16)?, 3, 5.0, 1.0, 42);
    io::save(&u, p("u.lbf"))?;
    let v = io::load(p("u.lbf"))?;
    let bit_exact = u.grid() == v.grid()
        && u.components() == v.components()
        && u.data().iter().zip(v.data()).all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits())
        && io::encode(&v) == std::fs::read(p("u.lbf"))?;

    let config = format!("{}/configs/desk_main_q4.json", env!("CARGO_MANIFEST_DIR"));
    let mut same = true;
    let mut codes = Vec::new();
    let runs: [(&str, Vec<String>); 3] = [
        ("norm", vec!["norm".into(), "--field".into(), p("u.lbf"), "--s".into(), "-1".into(), "--sigma".into(), "0.5".into(), "--p".into(), "inf".into(), "--q".into(), "4".into()]),
        ("inflate", vec!["inflate".into(), "--config".into(), config.clone(), "--out".into()]),
        ("lp", vec!["lp-decompose".into(), "--field".into(), p("u.lbf"), "--out-prefix".into()]),
    ];
    for (name, base) in runs {
        let mut outputs = Vec::new();
        for k in 0..2 {
            let mut args = base.clone();
            let target = p(&format!("{name}{k}"));
            match name {
                "norm" => args.extend(["--out".into(), format!("{target}.json")]),
                "inflate" => args.push(format!("{target}.csv")),
                _ => args.push(target.clone()),
            }
            let refs: Vec<&str> = args.iter().map(String::as_str).collect();
            codes.push(run_cli(&refs)?);
            let file = match name {
                "norm" => format!("{target}.json"),
                "inflate" => format!("{target}.csv"),
                _ => format!("{target}_blocks.csv"),
            };
            outputs.push(std::fs::read(&file)?);
        }
        same &= outputs[0] == outputs[1] && !outputs[0].is_empty();
    }
    let ok = codes.iter().all(|&c| c == 0);
    Ok(outcome(
        bit_exact && same && ok,
        format!("LBF bit-exact {bit_exact}, repeated CLI outputs identical {same}, exit codes {codes:?}"),
    ))
}

fn report(index: usize, name: &str, result: Check) -> bool {
    let (pass, detail) = match result {
        Ok(o) => (o.pass, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!("criterion {index:2} [{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn main() {
    let mut all = true;
    all &= report(1, "partition of unity", partition());
    all &= report(2, "sigma_q exactness", sigma_q_values());
    all &= report(3, "Leray projection", leray_checks());
    all &= report(4, "Taylor-Green oracle", taylor_green_oracle());
    all &= report(5, "solver cross-validation", solver_cross_validation());
    all &= report(6, "heat characterization equivalence", norm_equivalence());
    all &= report(7, "path-norm inequality suites", inequality_suites());
    all &= report(8, "initial-data plateau", plateau());
    match (sweeps(EPS), sweeps(EPS / 2.0)) {
        (Ok(main), Ok(finer)) => {
            all &= report(9, "inflation scaling slopes", scaling(&main));
            all &= report(10, "phase boundary", phase_boundary(&main));
            all &= report(11, "functional hierarchy", hierarchy(&[&main, &finer]));
        }
        (Err(e), _) | (_, Err(e)) => {
            let msg = e.to_string();
            for (i, name) in [(9, "inflation scaling slopes"), (10, "phase boundary"), (11, "functional hierarchy")] {
                all &= report(i, name, Err(logbesov::Error::Numerical(msg.clone())));
            }
        }
    }
    all &= report(12, "cubic remainder", remainder());
    all &= report(13, "determinism and I/O", determinism());
    println!("acceptance: {}", if all { "all criteria pass" } else { "some criteria fail" });
    if !all {
        std::process::exit(1);
    }
}
