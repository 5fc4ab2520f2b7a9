//! Time-weighted path norms, Hardy-Littlewood averages and the Abel-type bilinear operator.
//!
//! Every integral runs on a log-spaced grid in `(0, T]` and is taken with respect to
//! `dt/t`, i.e. uniformly in `ln t`. The part below the smallest node is closed with a
//! fitted `A t^α |ln(t/(eT))|^{-β}` law, which is exact for the profiles used throughout.

pub mod quadrature;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use quadrature::{cumulative, gl32, integrate, lagrange, TailModel};

pub const DEFAULT_DENSITY: usize = 16;
pub const DEFAULT_MIN_RATIO: f64 = 1e-6;

/// Nodes `T·10^{-k/density}` from `T·min_ratio` (rounded down to a node) up to `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    density: usize,
    nodes: Vec<f64>,
}

impl TimeGrid {
    pub fn log_spaced(horizon: f64, density: usize, min_ratio: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Invalid(format!("horizon must be positive, got {horizon}")));
        }
        if density < 2 {
            return Err(Error::Invalid("need at least 2 nodes per decade".into()));
        }
        if !(min_ratio > 0.0 && min_ratio < 1.0) {
            return Err(Error::Invalid(format!("min ratio must lie in (0,1), got {min_ratio}")));
        }
        let steps = (density as f64 * (-min_ratio.log10()) - 1e-9).ceil() as usize;
        let nodes = (0..=steps)
            .rev()
            .map(|k| if k == 0 { horizon } else { horizon * 10f64.powf(-(k as f64) / density as f64) })
            .collect();
        Ok(Self { horizon, density, nodes })
    }

    pub fn new(horizon: f64) -> Result<Self> {
        Self::log_spaced(horizon, DEFAULT_DENSITY, DEFAULT_MIN_RATIO)
    }

    /// Recognizes increasing nodes as a log-spaced grid ending at the last node.
    pub fn from_nodes(nodes: &[f64]) -> Result<Self> {
        if nodes.len() < 3 || nodes.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::Invalid("need at least three positive node times".into()));
        }
        let horizon = *nodes.last().unwrap();
        let per_decade = std::f64::consts::LN_10 / (nodes[1] / nodes[0]).ln();
        let density = per_decade.round();
        if !(density >= 2.0) || (per_decade - density).abs() > 1e-6 * density {
            return Err(Error::Invalid("node times are not log-spaced with an integer density".into()));
        }
        let grid = Self::log_spaced(horizon, density as usize, nodes[0] / horizon * (1.0 + 1e-12))?;
        let fits = grid.nodes.len() == nodes.len()
            && grid.nodes.iter().zip(nodes).all(|(a, b)| ((a - b) / b).abs() <= 1e-9);
        if !fits {
            return Err(Error::Invalid("node times are not a log-spaced grid".into()));
        }
        Ok(grid)
    }

    /// Same span at twice the density; every old node is kept.
    pub fn refined(&self) -> Self {
        let ratio = self.nodes[0] / self.horizon;
        Self::log_spaced(self.horizon, 2 * self.density, ratio * (1.0 - 1e-12)).unwrap()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn density(&self) -> usize {
        self.density
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Spacing in `ln t`.
    pub fn step(&self) -> f64 {
        std::f64::consts::LN_10 / self.density as f64
    }

    /// Index in `self` of a node of a coarser grid, if present.
    pub fn position(&self, t: f64) -> Option<usize> {
        self.nodes.iter().position(|&s| ((s - t) / t).abs() < 1e-12)
    }
}

/// `|ln(t/(eT))| = 1 + ln(T/t)`.
pub fn log_weight(t: f64, horizon: f64) -> f64 {
    1.0 + (horizon / t).ln()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Mismatch(format!(
                "series has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite sample at t = {}", grid.nodes[i])));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: &TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.nodes.iter().map(|&t| f(t)).collect();
        Self { grid: grid.clone(), values }
    }

    pub fn zeros(grid: &TimeGrid) -> Self {
        Self { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = self.grid.nodes.iter().zip(&self.values).map(|(&t, &v)| f(t, v)).collect();
        Self { grid: self.grid.clone(), values }
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map(|_, v| a * v)
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon
    }

    /// Values at the nodes of a coarser grid contained in this one.
    pub fn restrict(&self, coarse: &TimeGrid) -> Option<Vec<f64>> {
        coarse
            .nodes
            .iter()
            .map(|&t| self.grid.position(t).map(|i| self.values[i]))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KatoParams {
    pub sigma: f64,
    pub q: f64,
    pub horizon: f64,
}

impl KatoParams {
    pub fn new(sigma: f64, q: f64, horizon: f64) -> Result<Self> {
        if !(sigma >= 0.0) {
            return Err(Error::Invalid(format!("sigma must be >= 0, got {sigma}")));
        }
        if !(q >= 1.0) {
            return Err(Error::Invalid(format!("q must be >= 1, got {q}")));
        }
        if !(horizon > 0.0) {
            return Err(Error::Invalid(format!("horizon must be positive, got {horizon}")));
        }
        Ok(Self { sigma, q, horizon })
    }
}

fn tail_model(grid: &TimeGrid, values: &[f64]) -> Option<TailModel> {
    let n = values.len();
    if n < 3 {
        return None;
    }
    let d = grid.density.min((n - 1) / 2);
    let idx = [0, d, 2 * d];
    let t = idx.map(|i| grid.nodes[i]);
    let v = idx.map(|i| values[i]);
    TailModel::fit(t, v, grid.horizon)
}

/// Integral of `v` against `dt/t` over `(0, T]`, with the flag set when it diverges at 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Integral {
    pub value: f64,
    pub divergent: bool,
}

/// True when the samples near `t = 0` are roundoff relative to the whole series.
fn negligible_start(grid: &TimeGrid, values: &[f64]) -> bool {
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let reach = (2 * grid.density + 1).min(values.len());
    values[..reach].iter().all(|v| v.abs() <= 1e-13 * peak)
}

fn tail_of(grid: &TimeGrid, values: &[f64]) -> (f64, bool) {
    if negligible_start(grid, values) {
        return (0.0, false);
    }
    let decade_rule = decade_growth(grid, values);
    match tail_model(grid, values) {
        Some(m) => match m.integral_below(grid.nodes[0], 0.0) {
            Some(v) => (v, decade_rule),
            None => (f64::INFINITY, true),
        },
        None => (0.0, decade_rule),
    }
}

/// True when the integral over the smallest decade exceeds ten times the next one.
fn decade_growth(grid: &TimeGrid, values: &[f64]) -> bool {
    let d = grid.density;
    if values.len() < 2 * d + 1 {
        return false;
    }
    let h = grid.step();
    let first = integrate(&values[..=d], h).abs();
    let second = integrate(&values[d..=2 * d], h).abs();
    first > 10.0 * second && first > 0.0
}

pub fn integrate_dt_over_t(f: &TimeSeries) -> Integral {
    let (tail, divergent) = tail_of(&f.grid, &f.values);
    let body = integrate(&f.values, f.grid.step());
    Integral { value: tail + body, divergent: divergent || !tail.is_finite() }
}

/// Maximum over the nodes, refined by a parabola in `ln t` around an interior maximum.
pub fn refined_sup(values: &[f64]) -> f64 {
    let (i, &m) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap_or((0, &0.0));
    if i == 0 || i + 1 >= values.len() {
        return m;
    }
    let (a, b, c) = (values[i - 1], m, values[i + 1]);
    let curv = a - 2.0 * b + c;
    if curv >= 0.0 {
        return m;
    }
    let shift = 0.5 * (a - c) / curv;
    (b - 0.25 * (a - c) * shift).max(m)
}

fn weighted(f: &TimeSeries, sigma: f64) -> Vec<f64> {
    let t_max = f.grid.horizon;
    f.grid
        .nodes
        .iter()
        .zip(&f.values)
        .map(|(&t, &v)| t.sqrt() * log_weight(t, t_max).powf(sigma) * v.abs())
        .collect()
}

fn check_horizon(f: &TimeSeries, kp: &KatoParams) -> Result<()> {
    if ((f.grid.horizon - kp.horizon) / kp.horizon).abs() > 1e-12 {
        return Err(Error::Mismatch(format!(
            "series horizon {} differs from norm horizon {}",
            f.grid.horizon, kp.horizon
        )));
    }
    Ok(())
}

/// `L^q(dt/t)` norm of nonnegative samples; `q = ∞` takes the refined maximum.
pub fn lq_dt_over_t(grid: &TimeGrid, w: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return refined_sup(w);
    }
    let powered: Vec<f64> = w.iter().map(|v| v.powf(q)).collect();
    let s = TimeSeries { grid: grid.clone(), values: powered };
    integrate_dt_over_t(&s).value.max(0.0).powf(1.0 / q)
}

/// `‖√t |ln(t/(eT))|^σ f‖_{L^q(dt/t)}`.
pub fn kdot_norm(f: &TimeSeries, kp: &KatoParams) -> Result<f64> {
    check_horizon(f, kp)?;
    Ok(lq_dt_over_t(&f.grid, &weighted(f, kp.sigma), kp.q))
}

/// Sum of the `q` and `∞` seminorms; at `q = ∞` the single sup norm.
pub fn k_norm(f: &TimeSeries, kp: &KatoParams) -> Result<f64> {
    let a = kdot_norm(f, kp)?;
    if kp.q.is_infinite() {
        return Ok(a);
    }
    let sup = KatoParams { q: f64::INFINITY, ..*kp };
    Ok(a + kdot_norm(f, &sup)?)
}

/// Series together with a divergence flag raised near `t = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlaggedSeries {
    pub series: TimeSeries,
    pub divergent: bool,
}

fn running_integral(grid: &TimeGrid, integrand: Vec<f64>) -> FlaggedSeries {
    let (tail, divergent) = tail_of(grid, &integrand);
    let tail = if tail.is_finite() { tail } else { 0.0 };
    let values = cumulative(&integrand, grid.step()).into_iter().map(|v| v + tail).collect();
    FlaggedSeries {
        series: TimeSeries { grid: grid.clone(), values },
        divergent,
    }
}

/// `F(t) = ∫_0^t f(τ) dτ/τ`.
pub fn hl_average(f: &TimeSeries) -> FlaggedSeries {
    running_integral(&f.grid, f.values.clone())
}

/// `F(t) = ∫_0^t |ln(τ/(eT))|^{-1} f(τ) dτ/τ`.
pub fn hl_average_logdamped(f: &TimeSeries) -> FlaggedSeries {
    let t_max = f.grid.horizon;
    let integrand = f
        .grid
        .nodes
        .iter()
        .zip(&f.values)
        .map(|(&t, &v)| v / log_weight(t, t_max))
        .collect();
    running_integral(&f.grid, integrand)
}

/// Virtual decades below the first node covered by explicit panels before the closed-form tail.
const VIRTUAL_DECADES: usize = 4;

/// Powers continuing a product below the first node.
const TAIL_POWERS: [f64; 2] = [0.0, -0.5];

/// `Σ c_a (τ/t_0)^a` through the samples at the first node and an eighth of a decade above.
/// Linear in the samples; sample times do not move under grid refinement.
struct PowerTail {
    t0: f64,
    coeffs: Vec<(f64, f64)>,
}

impl PowerTail {
    fn fit(grid: &TimeGrid, values: &[f64]) -> Self {
        let t0 = grid.nodes[0];
        let count = TAIL_POWERS.len().min(values.len());
        let stride = (grid.density / 8).clamp(1, values.len().saturating_sub(1).max(1));
        let idx: Vec<usize> = (0..count).map(|k| k * stride).collect();
        let a: Vec<Vec<f64>> = idx
            .iter()
            .map(|&i| TAIL_POWERS[..count].iter().map(|&p| (grid.nodes[i] / t0).powf(p)).collect())
            .collect();
        let b: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
        let c = quadrature::solve_dense(a, b);
        Self { t0, coeffs: TAIL_POWERS.iter().cloned().zip(c).collect() }
    }

    fn value(&self, tau: f64) -> f64 {
        self.coeffs.iter().map(|&(p, c)| c * (tau / self.t0).powf(p)).sum()
    }

    /// `∫_0^{τ_b} τ^k v(τ) dτ`.
    fn moment(&self, tau_b: f64, k: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|&(p, c)| c * self.t0.powf(-p) * tau_b.powf(p + k + 1.0) / (p + k + 1.0))
            .sum()
    }
}

/// `𝓑(f,g)(t) = ∫_0^t (t-τ)^{-1/2} f(τ) g(τ) dτ` at every node.
///
/// With `τ = t(1-s²)` the kernel becomes `2√t ds`; panels below `t/2` are integrated in
/// `ln τ` instead. Panels follow the grid and the product is interpolated in `ln τ`; below the first node it is continued by a fixed power basis,
/// so the result is exactly linear in the product. The fitted tail law only decides the
/// divergence flag.
pub fn scalar_bilinear(f: &TimeSeries, g: &TimeSeries) -> Result<FlaggedSeries> {
    if f.grid != g.grid {
        return Err(Error::Mismatch("bilinear operands live on different time grids".into()));
    }
    let grid = &f.grid;
    let prod: Vec<f64> = f.values.iter().zip(&g.values).map(|(a, b)| a * b).collect();
    if prod.iter().all(|&v| v == 0.0) {
        return Ok(FlaggedSeries { series: TimeSeries::zeros(grid), divergent: false });
    }
    let x0 = grid.nodes[0].ln();
    let h = grid.step();
    let n = grid.len();
    let tail = PowerTail::fit(grid, &prod);
    let eval = |tau: f64| -> f64 {
        if tau >= grid.nodes[0] {
            lagrange(&prod, x0, h, tau.ln().min(grid.nodes[n - 1].ln()))
        } else {
            tail.value(tau)
        }
    };
    let ratio = 10f64.powf(-1.0 / grid.density as f64);
    let n_virtual = VIRTUAL_DECADES * grid.density;
    let tau_bottom = grid.nodes[0] * ratio.powi(n_virtual as i32);
    let divergent = !negligible_start(grid, &prod)
        && tail_model(grid, &prod).is_some_and(|m| m.integral_below(tau_bottom, 1.0).is_none());
    let tail_terms = Some((tail.moment(tau_bottom, 0.0), tail.moment(tau_bottom, 1.0)));
    let (gx, gw) = gl32();
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let t = grid.nodes[i];
            let panel = |tau_hi: f64, tau_lo: f64| -> f64 {
                if tau_hi <= 0.5 * t {
                    let (a, b) = (tau_lo.ln(), tau_hi.ln());
                    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
                    return gx
                        .iter()
                        .zip(gw)
                        .map(|(x, w)| {
                            let tau = (mid + half * x).exp();
                            w * eval(tau) * tau / (t - tau).sqrt()
                        })
                        .sum::<f64>()
                        * half
                        / (2.0 * t.sqrt());
                }
                let s_lo = (1.0 - tau_hi / t).max(0.0).sqrt();
                let s_hi = (1.0 - tau_lo / t).max(0.0).sqrt();
                let mid = 0.5 * (s_lo + s_hi);
                let half = 0.5 * (s_hi - s_lo);
                gx.iter()
                    .zip(gw)
                    .map(|(x, w)| {
                        let s = mid + half * x;
                        w * eval(t * (1.0 - s * s))
                    })
                    .sum::<f64>()
                    * half
            };
            let mut acc = 0.0;
            for j in (1..=i).rev() {
                acc += panel(grid.nodes[j], grid.nodes[j - 1]);
            }
            let mut hi = grid.nodes[0];
            for _ in 0..n_virtual {
                let lo = hi * ratio;
                acc += panel(hi, lo);
                hi = lo;
            }
            let mut total = 2.0 * t.sqrt() * acc;
            if let Some((a, b)) = tail_terms {
                total += (a + 0.5 * b / t) / t.sqrt();
            }
            total
        })
        .collect();
    Ok(FlaggedSeries {
        series: TimeSeries { grid: grid.clone(), values },
        divergent,
    })
}

/// Whether `(σ, q)` lies where the bilinear estimate is guaranteed.
pub fn bilinear_region(sigma: f64, q: f64) -> bool {
    let a = sigma >= 1.0;
    let b = (0.5..1.0).contains(&sigma) && q >= 1.0 / sigma && q <= 1.0 / (1.0 - sigma);
    a || b
}

#[derive(Clone, Debug, Serialize)]
pub struct BilinearReport {
    pub sigma: f64,
    pub q: f64,
    pub guaranteed: bool,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub divergent: usize,
}

/// `‖𝓑(f,g)‖_K / (‖f‖_K ‖g‖_K)` over a family of pairs.
pub fn bilinear_constant_report(
    family: &[(TimeSeries, TimeSeries)],
    kp: &KatoParams,
) -> Result<BilinearReport> {
    let mut ratios = Vec::with_capacity(family.len());
    let mut divergent = 0;
    for (f, g) in family {
        let nf = k_norm(f, kp)?;
        let ng = k_norm(g, kp)?;
        if nf == 0.0 || ng == 0.0 {
            ratios.push(0.0);
            continue;
        }
        let b = scalar_bilinear(f, g)?;
        if b.divergent {
            divergent += 1;
        }
        ratios.push(k_norm(&b.series, kp)? / (nf * ng));
    }
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    Ok(BilinearReport {
        sigma: kp.sigma,
        q: kp.q,
        guaranteed: bilinear_region(kp.sigma, kp.q),
        ratios,
        max_ratio,
        divergent,
    })
}

/// Both sides of the Hardy-type estimate for `F = ∫_0^t f dτ/τ`:
/// `‖|ln|^{1-1/q} F‖_{L^q}` against `‖|ln|^{2-2/q} f‖_{L^{q/2}}`, all in `dt/t`.
pub fn hardy_sides(f: &TimeSeries, q: f64) -> Result<(f64, f64, bool)> {
    if !(q >= 2.0) {
        return Err(Error::Invalid(format!("Hardy-type estimate needs q >= 2, got {q}")));
    }
    let t_max = f.horizon();
    let big_f = hl_average(&f.map(|_, v| v.abs()));
    let e = if q.is_infinite() { 1.0 } else { 1.0 - 1.0 / q };
    let lhs_w: Vec<f64> = f
        .grid
        .nodes
        .iter()
        .zip(&big_f.series.values)
        .map(|(&t, &v)| log_weight(t, t_max).powf(e) * v.abs())
        .collect();
    let rhs_w: Vec<f64> = f
        .grid
        .nodes
        .iter()
        .zip(&f.values)
        .map(|(&t, &v)| log_weight(t, t_max).powf(2.0 * e) * v.abs())
        .collect();
    let lhs = lq_dt_over_t(&f.grid, &lhs_w, q);
    let rhs_int = if q.is_infinite() {
        Integral { value: refined_sup(&rhs_w), divergent: false }
    } else {
        let p = q / 2.0;
        let s = TimeSeries { grid: f.grid.clone(), values: rhs_w.iter().map(|v| v.powf(p)).collect() };
        let i = integrate_dt_over_t(&s);
        Integral { value: i.value.powf(1.0 / p), divergent: i.divergent }
    };
    Ok((lhs, rhs_int.value, big_f.divergent || rhs_int.divergent))
}

/// Both sides of the log-damped estimate: `‖|ln| F‖_{L^q}` against `‖|ln| f‖_{L^q}`.
pub fn damped_sides(f: &TimeSeries, q: f64) -> Result<(f64, f64, bool)> {
    if !(q >= 1.0) {
        return Err(Error::Invalid(format!("q must be >= 1, got {q}")));
    }
    let t_max = f.horizon();
    let big_f = hl_average_logdamped(&f.map(|_, v| v.abs()));
    let lw = |vals: &[f64]| -> Vec<f64> {
        f.grid.nodes.iter().zip(vals).map(|(&t, &v)| log_weight(t, t_max) * v.abs()).collect()
    };
    let lhs_w = lw(&big_f.series.values);
    let rhs_w = lw(&f.values);
    let rhs_div = if q.is_infinite() {
        false
    } else {
        let s = TimeSeries { grid: f.grid.clone(), values: rhs_w.iter().map(|v| v.powf(q)).collect() };
        integrate_dt_over_t(&s).divergent
    };
    Ok((
        lq_dt_over_t(&f.grid, &lhs_w, q),
        lq_dt_over_t(&f.grid, &rhs_w, q),
        big_f.divergent || rhs_div,
    ))
}

/// Constants proven for the Hardy-type estimate at the endpoints, with 1 used in between.
pub fn hardy_constant(q: f64) -> f64 {
    if q == 2.0 {
        std::f64::consts::FRAC_1_SQRT_2
    } else {
        1.0
    }
}

pub fn damped_constant(q: f64) -> f64 {
    if q == 1.0 {
        0.5
    } else {
        1.0
    }
}

/// Fifty nonnegative profiles `(t/T)^a |ln(t/(eT))|^{-β} m(t)`, with five values of `a`,
/// five of `β > 2` and `m` either 1 or `1 + sin(2 ln(t/T))/2`.
pub fn builtin_family(grid: &TimeGrid) -> Vec<TimeSeries> {
    let t_max = grid.horizon;
    let mut out = Vec::with_capacity(50);
    for modulated in [false, true] {
        for &a in &[0.0, 0.05, 0.2, 0.5, 1.0] {
            for &beta in &[2.25, 2.5, 3.0, 3.5, 4.0] {
                out.push(TimeSeries::from_fn(grid, |t| {
                    let m = if modulated { 1.0 + 0.5 * (2.0 * (t / t_max).ln()).sin() } else { 1.0 };
                    (t / t_max).powf(a) * log_weight(t, t_max).powf(-beta) * m
                }));
            }
        }
    }
    out
}

/// Pairs `(f_i, f_{i+7})` of `t^{-1/2}`-scaled builtin profiles, membership in every
/// path space with `σ <= 1` guaranteed by `β > 2`.
pub fn builtin_bilinear_family(grid: &TimeGrid) -> Vec<(TimeSeries, TimeSeries)> {
    let base: Vec<TimeSeries> = builtin_family(grid)
        .into_iter()
        .map(|f| f.map(|t, v| v / t.sqrt()))
        .collect();
    (0..base.len()).map(|i| (base[i].clone(), base[(i + 7) % base.len()].clone())).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Inequality {
    /// `‖|ln|^{1-1/q} F‖_{L^q} ≤ C ‖|ln|^{2-2/q} f‖_{L^{q/2}}` for `F = ∫_0^t f dτ/τ`.
    Hardy,
    /// `‖|ln| F‖_{L^q} ≤ C ‖|ln| f‖_{L^q}` for the log-damped average.
    Damped,
    /// `‖𝓑(f,g)‖_K ≤ C ‖f‖_K ‖g‖_K`.
    Bilinear,
}

impl std::str::FromStr for Inequality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hardy" => Ok(Self::Hardy),
            "damped" => Ok(Self::Damped),
            "bilinear" => Ok(Self::Bilinear),
            _ => Err(Error::Invalid(format!("unknown inequality {s:?}; use hardy, damped or bilinear"))),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InequalityReport {
    pub inequality: Inequality,
    pub sigma: f64,
    #[serde(serialize_with = "serialize_exponent")]
    pub q: f64,
    /// Proven constant where one is known.
    pub reference_constant: Option<f64>,
    /// Largest left/right ratio over the family.
    pub measured_constant: f64,
    pub ratios: Vec<f64>,
    /// Entries whose ratio is not finite or exceeds the reference constant.
    pub violations: usize,
    /// Entries whose quadrature raised the divergence flag.
    pub divergent: usize,
    /// Only meaningful for the bilinear estimate.
    pub guaranteed: bool,
}

fn serialize_exponent<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

/// Evaluates one of the three estimates over `family`; bilinear pairs are `(f_i, f_{i+1})`
/// unless `pairs` is given.
pub fn inequality_check(
    inequality: Inequality,
    family: &[TimeSeries],
    pairs: Option<&[(TimeSeries, TimeSeries)]>,
    sigma: f64,
    q: f64,
) -> Result<InequalityReport> {
    if family.is_empty() && pairs.is_none_or(|p| p.is_empty()) {
        return Err(Error::Invalid("empty test family".into()));
    }
    let (ratios, divergent, reference, guaranteed) = match inequality {
        Inequality::Hardy | Inequality::Damped => {
            let sides = family
                .par_iter()
                .map(|f| match inequality {
                    Inequality::Hardy => hardy_sides(f, q),
                    _ => damped_sides(f, q),
                })
                .collect::<Result<Vec<_>>>()?;
            let reference = match inequality {
                Inequality::Hardy => hardy_constant(q),
                _ => damped_constant(q),
            };
            let ratios = sides.iter().map(|&(l, r, _)| ratio(l, r)).collect();
            (ratios, sides.iter().filter(|s| s.2).count(), Some(reference), true)
        }
        Inequality::Bilinear => {
            let horizon = family.first().map_or_else(|| pairs.unwrap()[0].0.horizon(), |f| f.horizon());
            let kp = KatoParams::new(sigma, q, horizon)?;
            let owned: Vec<(TimeSeries, TimeSeries)>;
            let pairs = match pairs {
                Some(p) => p,
                None => {
                    let n = family.len();
                    owned = (0..n).map(|i| (family[i].clone(), family[(i + 1) % n].clone())).collect();
                    &owned
                }
            };
            let r = bilinear_constant_report(pairs, &kp)?;
            (r.ratios, r.divergent, None, r.guaranteed)
        }
    };
    let limit = reference.map_or(f64::INFINITY, |c| c * (1.0 + 1e-6));
    let violations = ratios.iter().filter(|r: &&f64| !r.is_finite() || **r > limit).count();
    Ok(InequalityReport {
        inequality,
        sigma,
        q,
        reference_constant: reference,
        measured_constant: ratios.iter().cloned().fold(0.0, f64::max),
        ratios,
        violations,
        divergent,
        guaranteed,
    })
}
