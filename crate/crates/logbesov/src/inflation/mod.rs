//! Norm-inflation laboratory: lacunary initial data built from carrier vectors, audits of
//! its frequency geometry, the Duhamel functionals restricted to the low index set, and
//! scaling experiments across the size parameter `m`.
//!
//! High-frequency data is represented sparsely on a virtual lattice (no grid is allocated);
//! small configurations can also be materialized on a dense grid for the full solver.

pub mod sparse;

use std::collections::HashSet;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::besov_norms::{lq_sum, restricted_from_blocks, BesovParams};
use crate::core_field::{Domain, GridSpec, SpectralField};
use crate::error::{Error, Result};
use crate::littlewood_paley::phi;
use crate::navier_stokes::{duhamel_all, heat_trajectory, picard_solve};
use crate::path_norms::{KatoParams, TimeGrid};

use sparse::{bilinear, radius, sup_norm, Kernel, Lattice, Run, SparseField, SupEstimate};

/// Serde helpers writing `∞` as the string `"inf"`.
pub mod exponent {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => crate::besov_norms::parse_exponent(&t).map_err(de::Error::custom),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Sums over both index sets, amplitude `|K_A|^{-σ-1/q}`.
    #[default]
    Main,
    /// Single high index, amplitude `|K_B|^{-σ}`.
    SmallQ,
    /// Single low index, amplitude `|K_A|^{-σ-1/q}`.
    LargeQ,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Main => "main",
            Variant::SmallQ => "small-q",
            Variant::LargeQ => "large-q",
        }
    }
}

/// Evaluation time: `factor · ε / min_{k∈K_A} 4^k`, or a fixed value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeRule {
    Factor(f64),
    Explicit(f64),
}

impl Default for TimeRule {
    fn default() -> Self {
        TimeRule::Factor(DESK_TIME_FACTOR)
    }
}

/// Spatial offsets `c_l` along the first axis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Translation {
    /// `c_l = 2π i / |K_B|` for the `i`-th low index.
    #[default]
    Spread,
    /// `c_l = 2^l`.
    Dyadic,
    None,
}

pub const DESK_TIME_FACTOR: f64 = 256.0;
pub const DESK_BUMP_SCALE: f64 = 256.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InflationConfig {
    pub n: usize,
    pub variant: Variant,
    #[serde(rename = "K_A")]
    pub k_a: Vec<i32>,
    #[serde(rename = "K_B")]
    pub k_b: Vec<i32>,
    pub eps: f64,
    pub delta: f64,
    pub sigma: f64,
    #[serde(with = "exponent")]
    pub q: f64,
    /// Virtual lattice size `N`; `None` picks the smallest power of two that holds the data.
    #[serde(rename = "N", default)]
    pub size: Option<u64>,
    /// Bumps are `φ(8|(ξ1/R, ξ2, ξ3)|)`; `R < 16/3` gives single-mode bumps.
    pub bump_scale: f64,
    pub translation: Translation,
    pub t_rule: TimeRule,
}

impl InflationConfig {
    /// Desk preset for size `m`: `K_B = {4(m+1), …, 8m}` in steps of 4 and
    /// `K_A = {8m+4, …, 9m+3}` (single indices for the two variants).
    pub fn desk(variant: Variant, m: usize, eps: f64, sigma: f64, q: f64) -> Result<Self> {
        if m == 0 || m > 6 {
            return Err(Error::Invalid(format!("desk preset needs 1 <= m <= 6, got {m}")));
        }
        let m = m as i32;
        let low: Vec<i32> = (m + 1..=2 * m).map(|k| 4 * k).collect();
        let high: Vec<i32> = (8 * m + 4..=9 * m + 3).collect();
        let (k_a, k_b) = match variant {
            Variant::Main => (high, low),
            Variant::SmallQ => (vec![8 * m + 4], low),
            Variant::LargeQ => (high, vec![4 * m]),
        };
        let cfg = Self {
            n: 3,
            variant,
            k_a,
            k_b,
            eps,
            delta: 1.0,
            sigma,
            q,
            size: None,
            bump_scale: DESK_BUMP_SCALE,
            translation: Translation::Spread,
            t_rule: TimeRule::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Small single-mode configuration that fits a dense `32³` grid.
    pub fn dense_companion(eps: f64) -> Result<Self> {
        let cfg = Self {
            n: 3,
            variant: Variant::Main,
            k_a: vec![3],
            k_b: vec![3],
            eps,
            delta: 1.0,
            sigma: 0.0,
            q: f64::INFINITY,
            size: Some(32),
            bump_scale: 1.0,
            translation: Translation::Spread,
            t_rule: TimeRule::Explicit(0.1),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::Invalid(format!("the construction needs n >= 3, got {}", self.n)));
        }
        if self.n > 3 {
            return Err(Error::Dimension(self.n));
        }
        if !(self.eps > 0.0 && 5.0 * self.eps * self.eps < 1.0) {
            return Err(Error::Invalid(format!("eps must lie in (0, 1/sqrt 5), got {}", self.eps)));
        }
        for (name, set) in [("K_A", &self.k_a), ("K_B", &self.k_b)] {
            if set.is_empty() || set[0] < 1 || set.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::Invalid(format!("{name} must be a nonempty increasing set of positive indices")));
            }
            if *set.last().unwrap() > 61 {
                return Err(Error::Invalid(format!("{name} exceeds the 64-bit lattice")));
            }
        }
        match self.variant {
            Variant::SmallQ if self.k_a.len() != 1 => {
                return Err(Error::Invalid("the small-q variant uses a single K_A index".into()))
            }
            Variant::LargeQ if self.k_b.len() != 1 => {
                return Err(Error::Invalid("the large-q variant uses a single K_B index".into()))
            }
            _ => {}
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::Invalid(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.sigma >= 0.0) || !(self.q >= 1.0) {
            return Err(Error::Invalid("need sigma >= 0 and q >= 1".into()));
        }
        if !(self.bump_scale > 0.0 && self.bump_scale.is_finite()) {
            return Err(Error::Invalid("bump scale must be positive".into()));
        }
        match self.t_rule {
            TimeRule::Factor(f) | TimeRule::Explicit(f) if !(f > 0.0 && f.is_finite()) => {
                return Err(Error::Invalid("time rule value must be positive".into()))
            }
            _ => {}
        }
        if let Some(n) = self.size {
            if n < 8 || !n.is_power_of_two() {
                return Err(Error::Invalid(format!("N must be a power of two >= 8, got {n}")));
            }
        }
        Ok(())
    }

    /// The `m` entering amplitudes.
    pub fn m(&self) -> usize {
        match self.variant {
            Variant::SmallQ => self.k_b.len(),
            _ => self.k_a.len(),
        }
    }

    /// Amplitude in front of the lacunary sums.
    pub fn prefactor(&self) -> f64 {
        let m = self.m() as f64;
        match self.variant {
            Variant::SmallQ => m.powf(-self.sigma),
            _ => m.powf(-self.sigma - inv(self.q)),
        }
    }

    /// Exponent of `m` predicted for the main functional.
    pub fn predicted_exponent(&self) -> f64 {
        predicted_exponent(self.variant, self.sigma, self.q)
    }

    pub fn t_star(&self) -> f64 {
        match self.t_rule {
            TimeRule::Explicit(t) => t,
            TimeRule::Factor(f) => f * self.eps * (-2.0 * self.k_a[0] as f64).exp2(),
        }
    }

    fn translation(&self, index: usize, l: i32, k1: i64) -> f64 {
        match self.translation {
            Translation::None => 0.0,
            Translation::Spread => {
                let m = self.k_b.len() as i128;
                TAU * ((index as i128 * k1 as i128).rem_euclid(m)) as f64 / m as f64
            }
            Translation::Dyadic => ((l as f64).exp2() * k1 as f64).rem_euclid(TAU),
        }
    }
}

fn inv(q: f64) -> f64 {
    if q.is_infinite() {
        0.0
    } else {
        1.0 / q
    }
}

pub fn predicted_exponent(variant: Variant, sigma: f64, q: f64) -> f64 {
    match variant {
        Variant::Main => 1.0 - sigma - inv(q),
        Variant::SmallQ => inv(q) - sigma,
        Variant::LargeQ => 1.0 - sigma - 2.0 * inv(q),
    }
}

/// `ρ(ξ) = φ(8|ξ|)`.
pub fn rho(xi: [f64; 3]) -> f64 {
    phi(8.0 * (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt())
}

/// `ρ` stretched by `scale` along the first axis.
pub fn rho_scaled(xi: [f64; 3], scale: f64) -> f64 {
    rho([xi[0] / scale, xi[1], xi[2]])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CarrierVectors {
    pub k: i32,
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: [f64; 3],
}

/// `a_k = 2^k (1,1,1)/√3`, `b_k = 2^{k-1}(ε, 2ε, √(1-5ε²))`, `c_k = 2^k e_1`.
pub fn carrier_vectors(k: i32, n: usize, eps: f64) -> Result<CarrierVectors> {
    if n < 3 {
        return Err(Error::Invalid(format!("carrier vectors need n >= 3, got {n}")));
    }
    if n > 3 {
        return Err(Error::Dimension(n));
    }
    if !(eps > 0.0 && 5.0 * eps * eps < 1.0) {
        return Err(Error::Invalid(format!("eps must lie in (0, 1/sqrt 5), got {eps}")));
    }
    let p = (k as f64).exp2();
    let a = p / 3f64.sqrt();
    let h = 0.5 * p;
    Ok(CarrierVectors {
        k,
        a: [a, a, a],
        b: [h * eps, 2.0 * h * eps, h * (1.0 - 5.0 * eps * eps).sqrt()],
        c: [p, 0.0, 0.0],
    })
}

fn lattice(v: [f64; 3]) -> Lattice {
    v.map(|x| x.round() as i64)
}

/// Which bump a run of the data belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ClusterTag {
    pub k: i32,
    pub l: i32,
    pub sa: i8,
    pub sb: i8,
}

/// Data `(u_1, u_2, 0)` at unit amplitude; multiply by `amplitude` for the actual field.
#[derive(Clone, Debug)]
pub struct InitialData {
    pub u1: SparseField,
    pub u2: SparseField,
    pub tags: Vec<ClusterTag>,
    pub amplitude: f64,
}

fn bump_weights(scale: f64) -> (i64, Vec<f64>) {
    let reach = (3.0 * scale / 16.0).ceil() as i64;
    let raw: Vec<f64> = (-reach..=reach).map(|d| rho_scaled([d as f64, 0.0, 0.0], scale)).collect();
    let first = raw.iter().position(|&w| w > 0.0).unwrap_or(reach as usize);
    let w: Vec<f64> = raw[first..raw.len() - first].to_vec();
    let total: f64 = w.iter().sum();
    (first as i64 - reach, w.into_iter().map(|x| x / total).collect())
}

/// Sparse initial data: `u_1 = Σ_{k,l} 2^k F^{-1}[Ψ_{kl}]`, `u_2 = -F^{-1}[(ξ1/ξ2) û_1]`.
pub fn sparse_initial_data(cfg: &InflationConfig) -> Result<InitialData> {
    cfg.validate()?;
    let (offset, weights) = bump_weights(cfg.bump_scale);
    let mut u1 = Vec::new();
    let mut u2 = Vec::new();
    let mut tags = Vec::new();
    let mut seen = HashSet::new();
    for &k in &cfg.k_a {
        let cv = carrier_vectors(k, cfg.n, cfg.eps)?;
        let a = lattice(cv.a);
        let scale = (k as f64).exp2();
        for (index, &l) in cfg.k_b.iter().enumerate() {
            let b = lattice(carrier_vectors(l, cfg.n, cfg.eps)?.b);
            for (sa, sb) in [(1i8, 1i8), (1, -1), (-1, 1), (-1, -1)] {
                let center: Lattice =
                    std::array::from_fn(|i| sa as i64 * a[i] + sb as i64 * b[i]);
                if center[1] == 0 {
                    return Err(Error::Invalid(format!("bump at {center:?} meets the plane xi_2 = 0")));
                }
                let start = [center[0] + offset, center[1], center[2]];
                let mut c1 = Vec::with_capacity(weights.len());
                let mut c2 = Vec::with_capacity(weights.len());
                for (i, &w) in weights.iter().enumerate() {
                    let k1 = start[0] + i as i64;
                    if !seen.insert([k1, start[1], start[2]]) {
                        return Err(Error::Invalid(format!(
                            "lattice rounding collision at {:?}",
                            [k1, start[1], start[2]]
                        )));
                    }
                    let v = Complex64::from_polar(scale * w, cfg.translation(index, l, k1));
                    c1.push(v);
                    c2.push(-v * (k1 as f64 / start[1] as f64));
                }
                u1.push(Run { start, coeffs: c1 });
                u2.push(Run { start, coeffs: c2 });
                tags.push(ClusterTag { k, l, sa, sb });
            }
        }
    }
    Ok(InitialData {
        u1: SparseField { runs: u1 },
        u2: SparseField { runs: u2 },
        tags,
        amplitude: cfg.prefactor(),
    })
}

/// Dense vector field `(u_1, u_2, 0)` on `grid` (amplitude included, `δ` excluded).
pub fn build_initial_data(cfg: &InflationConfig, grid: GridSpec) -> Result<SpectralField> {
    if grid.n != 3 {
        return Err(Error::Mismatch(format!("construction lives in 3 dimensions, grid has {}", grid.n)));
    }
    let audit = geometric_audit(cfg);
    if !audit.pass && !cfg.k_a.iter().any(|k| cfg.k_b.contains(k)) {
        return Err(Error::Invalid(format!("support audit failed: {}", audit.failures())));
    }
    let data = sparse_initial_data(cfg)?;
    let mut out = SpectralField::zeros(grid, 3, Domain::Spectral);
    let p = grid.points();
    for (c, field) in [(0usize, &data.u1), (1, &data.u2)] {
        for (k, v) in field.modes() {
            if grid.is_nyquist(&k) {
                return Err(Error::Nyquist(k.to_vec()));
            }
            let i = grid.flat_index(&k).ok_or_else(|| Error::Nyquist(k.to_vec()))?;
            out.data_mut()[c * p + i] += v * data.amplitude;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditCondition {
    pub name: String,
    pub pass: bool,
    /// Smallest relative margin; negative when violated.
    pub worst_margin: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub pass: bool,
    /// Virtual lattice size used for the dealiasing check.
    pub size: f64,
    pub conditions: Vec<AuditCondition>,
}

impl AuditReport {
    pub fn failures(&self) -> String {
        let names: Vec<&str> = self.conditions.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        names.join(", ")
    }

    pub fn condition(&self, name: &str) -> Option<&AuditCondition> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

fn plateau_margin(lo: f64, hi: f64, j: i32) -> f64 {
    let s = (j as f64).exp2();
    (lo / (0.75 * s) - 1.0).min(1.0 - hi / (1.25 * s))
}

fn support_gap(lo: f64, hi: f64, j: i32) -> f64 {
    let s = (j as f64).exp2();
    ((0.625 * s - hi) / s).max((lo - 1.5 * s) / s)
}

fn failed(name: &str, detail: String) -> AuditReport {
    AuditReport {
        pass: false,
        size: 0.0,
        conditions: vec![AuditCondition { name: name.into(), pass: false, worst_margin: f64::NEG_INFINITY, detail }],
    }
}

/// Virtual lattice size: the configured `N`, or the smallest power of two whose
/// dealiasing cube `|k_i| ≤ N/3` holds the data.
pub fn lattice_size(cfg: &InflationConfig, data: &InitialData) -> f64 {
    match cfg.size {
        Some(n) => n as f64,
        None => {
            let need = 3.0 * data.u1.max_component() as f64;
            need.log2().ceil().max(3.0).exp2()
        }
    }
}

/// Block separation, resonance placement, dealiasing and lattice conditions.
pub fn geometric_audit(cfg: &InflationConfig) -> AuditReport {
    if let Err(e) = cfg.validate() {
        return failed("config", e.to_string());
    }
    let data = match sparse_initial_data(cfg) {
        Ok(d) => d,
        Err(e) => return failed("lattice", e.to_string()),
    };
    let runs = &data.u1.runs;
    let tags = &data.tags;
    let mut conditions = vec![AuditCondition {
        name: "lattice".into(),
        pass: true,
        worst_margin: 0.0,
        detail: format!("{} bumps, {} modes, no collisions", runs.len(), data.u1.mode_count()),
    }];

    let mut block = f64::INFINITY;
    for (r, t) in runs.iter().zip(tags) {
        let (lo, hi) = r.radial_range();
        block = block.min(plateau_margin(lo, hi, t.k));
    }
    conditions.push(AuditCondition {
        name: "block-separation".into(),
        pass: block >= 0.0,
        worst_margin: block,
        detail: "each bump lies where its own window equals 1".into(),
    });

    let mut intended = f64::INFINITY;
    let mut stray = f64::INFINITY;
    for p in 0..runs.len() {
        for q in p..runs.len() {
            let start: Lattice = std::array::from_fn(|i| runs[p].start[i] + runs[q].start[i]);
            let len = runs[p].len() + runs[q].len() - 1;
            let (lo, hi) = Run { start, coeffs: vec![Complex64::default(); len] }.radial_range();
            let (tp, tq) = (tags[p], tags[q]);
            if tp.k == tq.k && tp.l == tq.l && tp.sa == -tq.sa && tp.sb == tq.sb {
                intended = intended.min(plateau_margin(lo, hi, tp.l));
            } else {
                for &j in &cfg.k_b {
                    stray = stray.min(support_gap(lo, hi, j));
                }
            }
        }
    }
    conditions.push(AuditCondition {
        name: "resonance-placement".into(),
        pass: intended >= 0.0 && stray >= 0.0,
        worst_margin: intended.min(stray),
        detail: format!("resonant pairs inside their low window (margin {intended:.3e}); other products miss every low window (margin {stray:.3e})"),
    });

    let size = lattice_size(cfg, &data);
    let top = data.u1.max_component() as f64;
    let alias = 1.0 - top / (size / 3.0);
    conditions.push(AuditCondition {
        name: "dealiasing".into(),
        pass: alias >= 0.0,
        worst_margin: alias,
        detail: format!("largest component {top:.6e} against N/3 = {:.6e}", size / 3.0),
    });
    AuditReport { pass: conditions.iter().all(|c| c.pass), size, conditions }
}

/// Geometric audit plus the sign structure of the resonant spectrum at `t*`.
pub fn support_audit(cfg: &InflationConfig) -> AuditReport {
    let mut report = geometric_audit(cfg);
    if !report.pass {
        return report;
    }
    let outcome = sparse_initial_data(cfg).and_then(|d| tensor_blocks(&d, &cfg.k_b, Kernel::Duhamel(cfg.t_star())));
    let cond = match outcome {
        Ok(rows) => {
            let worst = rows
                .iter()
                .map(|r| if r.main.coefficient_sum > 0.0 { r.main.value / r.main.coefficient_sum } else { 1.0 })
                .fold(1.0, f64::min);
            AuditCondition {
                name: "sign-structure".into(),
                pass: worst >= 1.0 - 1e-9,
                worst_margin: worst - 1.0,
                detail: "resonant blocks are translates of nonnegative spectra (sup = coefficient sum)".into(),
            }
        }
        Err(e) => AuditCondition {
            name: "sign-structure".into(),
            pass: false,
            worst_margin: f64::NEG_INFINITY,
            detail: e.to_string(),
        },
    };
    report.pass &= cond.pass;
    report.conditions.push(cond);
    report
}

/// Per-block sup-norms of the Duhamel terms at unit amplitude and `δ = 1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockRow {
    pub j: i32,
    pub main: SupEstimate,
    pub cross: f64,
    pub pressure: f64,
    /// First component of `-∫ e^{(t-τ)Δ} P∇·(u⊗u)` over the block.
    pub full: f64,
}

/// Outputs `(∂1-∂2)(u1u1)`, `∂2((u1+u2)u1)`, `∂1 Σ ∂α∂β/Δ (uαuβ)` and the full first
/// component, each restricted to the blocks in `set`.
pub fn tensor_blocks(data: &InitialData, set: &[i32], kernel: Kernel) -> Result<Vec<BlockRow>> {
    let keep = |lo: f64, hi: f64| set.iter().any(|&j| support_gap(lo, hi, j) < 0.0);
    let t = bilinear(&[&data.u1, &data.u2], &[(0, 0), (1, 0), (1, 1)], kernel, keep)?;
    let mut main = Vec::with_capacity(t.len());
    let mut cross = Vec::with_capacity(t.len());
    let mut pressure = Vec::with_capacity(t.len());
    let mut full = Vec::with_capacity(t.len());
    let i = Complex64::i();
    for (k, v) in t {
        let (x1, x2) = (k[0] as f64, k[1] as f64);
        let n2 = sparse::norm2(&k) as f64;
        let m = i * (x1 - x2) * v[0];
        let c = i * x2 * (v[0] + v[1]);
        let p = if n2 > 0.0 {
            i * x1 * (x1 * x1 * v[0] + 2.0 * x1 * x2 * v[1] + x2 * x2 * v[2]) / n2
        } else {
            Complex64::default()
        };
        main.push((k, m));
        cross.push((k, c));
        pressure.push((k, p));
        full.push((k, -(m + c - p)));
    }
    let fields = [main, cross, pressure, full].map(SparseField::from_modes);
    set.par_iter()
        .map(|&j| {
            let b = fields.each_ref().map(|f| f.block(j));
            Ok(BlockRow {
                j,
                main: sup_norm(&b[0])?,
                cross: sup_norm(&b[1])?.value,
                pressure: sup_norm(&b[2])?.value,
                full: sup_norm(&b[3])?.value,
            })
        })
        .collect()
}

fn restricted(rows: &[(i32, f64)], sigma: f64, q: f64) -> f64 {
    let params = BesovParams { s: -1.0, sigma, p: f64::INFINITY, q, jmax: None };
    let rows: Vec<(usize, f64)> = rows.iter().map(|&(j, v)| (j as usize, v)).collect();
    restricted_from_blocks(&rows, &params)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub t: f64,
    /// Main functional over `K_B`.
    pub main: f64,
    /// Same functional from coefficient sums of each block.
    pub main_footnote: f64,
    pub cross: f64,
    pub pressure: f64,
    /// Restricted norm of the first component of the second Picard iterate.
    pub full: f64,
    pub blocks: Vec<BlockRow>,
    /// Computed block value over `|K_A|(1-e^{-t 2^{2k_min+1}}) ε 2^j`, per block.
    pub surrogate_ratios: Vec<f64>,
}

fn require_audit(cfg: &InflationConfig) -> Result<()> {
    let audit = geometric_audit(cfg);
    if audit.pass {
        Ok(())
    } else {
        Err(Error::Invalid(format!("support audit failed: {}", audit.failures())))
    }
}

fn report_from_blocks(cfg: &InflationConfig, t: f64, blocks: Vec<BlockRow>) -> FunctionalReport {
    let scale = cfg.delta * cfg.delta * cfg.prefactor() * cfg.prefactor();
    let col = |f: &dyn Fn(&BlockRow) -> f64| -> f64 {
        let rows: Vec<(i32, f64)> = blocks.iter().map(|b| (b.j, f(b))).collect();
        scale * restricted(&rows, cfg.sigma, cfg.q)
    };
    let kmin = cfg.k_a[0] as f64;
    let g = cfg.k_a.len() as f64 * -(-t * (2.0 * kmin + 1.0).exp2()).exp_m1();
    let surrogate_ratios = blocks
        .iter()
        .map(|b| b.main.value / (g * cfg.eps * (b.j as f64).exp2()))
        .collect();
    FunctionalReport {
        t,
        main: col(&|b| b.main.value),
        main_footnote: col(&|b| b.main.coefficient_sum),
        cross: col(&|b| b.cross),
        pressure: col(&|b| b.pressure),
        full: col(&|b| b.full),
        surrogate_ratios,
        blocks,
    }
}

/// All functionals at time `t` for data `δ u⁰`.
pub fn functionals(cfg: &InflationConfig, t: f64) -> Result<FunctionalReport> {
    if !(t > 0.0) {
        return Err(Error::Invalid(format!("time must be positive, got {t}")));
    }
    require_audit(cfg)?;
    let data = sparse_initial_data(cfg)?;
    let blocks = tensor_blocks(&data, &cfg.k_b, Kernel::Duhamel(t))?;
    Ok(report_from_blocks(cfg, t, blocks))
}

/// `‖∫_0^t e^{(t-τ)Δ}(∂1-∂2)(e^{τΔ}u1 e^{τΔ}u1) dτ‖` over `K_B`, with the per-block rows.
pub fn inflation_functional(cfg: &InflationConfig, t: f64) -> Result<(f64, Vec<BlockRow>)> {
    let r = functionals(cfg, t)?;
    Ok((r.main, r.blocks))
}

/// `‖∫_0^t e^{(t-τ)Δ}∂2(e^{τΔ}(u1+u2) e^{τΔ}u1) dτ‖` over `K_B`.
pub fn cross_functional(cfg: &InflationConfig, t: f64) -> Result<f64> {
    Ok(functionals(cfg, t)?.cross)
}

/// `‖∫_0^t e^{(t-τ)Δ}∂1 Σ_{α,β≤2} (∂α∂β/Δ)(e^{τΔ}uα e^{τΔ}uβ) dτ‖` over `K_B`.
pub fn pressure_functional(cfg: &InflationConfig, t: f64) -> Result<f64> {
    Ok(functionals(cfg, t)?.pressure)
}

/// Unit-amplitude block sups of a sparse field: `(‖S_0 f‖_∞, [(j, ‖Δ_j f‖_∞)])`.
pub fn sparse_blocks(f: &SparseField) -> Result<(f64, Vec<(i32, SupEstimate)>)> {
    let low = sup_norm(&f.low())?.value;
    let blocks = f
        .blocks_present()
        .into_par_iter()
        .map(|j| Ok((j, sup_norm(&f.block(j))?)))
        .collect::<Result<Vec<_>>>()?;
    Ok((low, blocks))
}

fn besov_from_blocks(low: f64, blocks: &[(i32, SupEstimate)], sigma: f64, q: f64) -> f64 {
    let rows: Vec<(i32, f64)> = blocks.iter().map(|(j, s)| (*j, s.value)).collect();
    low + restricted(&rows, sigma, q)
}

/// `‖u_1⁰‖` and `‖u_2⁰‖` in `B^{-1,σ}_{∞q}` (without `δ`).
pub fn initial_data_norms(cfg: &InflationConfig) -> Result<(f64, f64)> {
    let data = sparse_initial_data(cfg)?;
    let (l1, b1) = sparse_blocks(&data.u1)?;
    let (l2, b2) = sparse_blocks(&data.u2)?;
    let a = data.amplitude;
    Ok((a * besov_from_blocks(l1, &b1, cfg.sigma, cfg.q), a * besov_from_blocks(l2, &b2, cfg.sigma, cfg.q)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingRow {
    pub m: usize,
    pub sigma: f64,
    #[serde(with = "exponent")]
    pub q: f64,
    pub t_star: f64,
    pub norm_u0: f64,
    pub norm_u0_second: f64,
    pub main: f64,
    pub main_footnote: f64,
    pub cross: f64,
    pub pressure: f64,
    pub full_solution_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    pub sigma: f64,
    pub predicted: f64,
    pub slope: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SizeDiagnostics {
    pub m: usize,
    /// Smallest geometric margin (block separation, resonance placement, dealiasing).
    pub audit_margin: f64,
    /// Smallest `value / coefficient_sum` over the resonant blocks.
    pub alignment: f64,
    /// Largest relative gap between attained value and envelope bound over data blocks.
    pub sup_gap: f64,
    pub surrogate_min: f64,
    pub surrogate_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InflationReport {
    pub variant: Variant,
    pub eps: f64,
    pub delta: f64,
    #[serde(with = "exponent")]
    pub q: f64,
    pub rows: Vec<ScalingRow>,
    pub fits: Vec<SlopeFit>,
    /// Largest `‖u⁰‖_{B^{-1,0}_{∞2}} / (m^{1/2-1/q-σ} ‖u⁰‖_{B^{-1,σ}_{∞q}})` over the sweep.
    pub comparison_constant: f64,
    pub diagnostics: Vec<SizeDiagnostics>,
}

impl InflationReport {
    pub fn fit(&self, sigma: f64) -> Option<&SlopeFit> {
        self.fits.iter().find(|f| f.sigma == sigma)
    }

    pub fn rows_for(&self, sigma: f64) -> Vec<&ScalingRow> {
        self.rows.iter().filter(|r| r.sigma == sigma).collect()
    }
}

/// Least-squares slope of `ln y` against `ln x`, with the RMS residual.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Invalid("slope fit needs at least two points".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Numerical("slope fit needs positive finite values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Invalid("slope fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let rss: f64 = lx.iter().zip(&ly).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    Ok((slope, (rss / n).sqrt()))
}

struct SizeResult {
    cfg: InflationConfig,
    t: f64,
    data_u1: (f64, Vec<(i32, SupEstimate)>),
    data_u2: (f64, Vec<(i32, SupEstimate)>),
    blocks: Vec<BlockRow>,
    audit_margin: f64,
}

/// Runs the family (one configuration per `m`) and evaluates every `σ` in `sigmas`.
///
/// The configurations must share variant, `q`, `ε` and `δ`; the `σ` stored in each is ignored.
pub fn scaling_experiment(family: &[InflationConfig], sigmas: &[f64]) -> Result<InflationReport> {
    let first = family.first().ok_or_else(|| Error::Invalid("empty configuration family".into()))?;
    if sigmas.is_empty() || sigmas.iter().any(|s| !(*s >= 0.0)) {
        return Err(Error::Invalid("sigma list must be nonempty and nonnegative".into()));
    }
    for c in family {
        if c.variant != first.variant || c.q != first.q || c.eps != first.eps || c.delta != first.delta {
            return Err(Error::Mismatch("family members differ in variant, q, eps or delta".into()));
        }
    }
    let results = family
        .par_iter()
        .map(|cfg| {
            let audit = support_audit(cfg);
            if !audit.pass {
                return Err(Error::Invalid(format!(
                    "support audit failed for m = {}: {}",
                    cfg.m(),
                    audit.failures()
                )));
            }
            let data = sparse_initial_data(cfg)?;
            let t = cfg.t_star();
            Ok(SizeResult {
                cfg: cfg.clone(),
                t,
                data_u1: sparse_blocks(&data.u1)?,
                data_u2: sparse_blocks(&data.u2)?,
                blocks: tensor_blocks(&data, &cfg.k_b, Kernel::Duhamel(t))?,
                audit_margin: audit
                    .conditions
                    .iter()
                    .filter(|c| matches!(c.name.as_str(), "block-separation" | "resonance-placement" | "dealiasing"))
                    .map(|c| c.worst_margin)
                    .fold(f64::INFINITY, f64::min),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    let mut fits = Vec::new();
    let mut comparison: f64 = 0.0;
    for &sigma in sigmas {
        let mut ms = Vec::new();
        let mut mains = Vec::new();
        for r in &results {
            let cfg = InflationConfig { sigma, ..r.cfg.clone() };
            let amp = cfg.prefactor();
            let rep = report_from_blocks(&cfg, r.t, r.blocks.clone());
            let n1 = besov_from_blocks(r.data_u1.0, &r.data_u1.1, sigma, cfg.q);
            let n2 = besov_from_blocks(r.data_u2.0, &r.data_u2.1, sigma, cfg.q);
            let plain = besov_from_blocks(r.data_u1.0, &r.data_u1.1, 0.0, 2.0);
            let m = cfg.m() as f64;
            comparison = comparison.max(plain / (m.powf(0.5 - inv(cfg.q) - sigma) * n1));
            rows.push(ScalingRow {
                m: cfg.m(),
                sigma,
                q: cfg.q,
                t_star: r.t,
                norm_u0: amp * n1,
                norm_u0_second: amp * n2,
                main: rep.main,
                main_footnote: rep.main_footnote,
                cross: rep.cross,
                pressure: rep.pressure,
                full_solution_norm: rep.full,
            });
            ms.push(m);
            mains.push(rep.main);
        }
        let (slope, residual) = if ms.len() >= 2 { loglog_fit(&ms, &mains)? } else { (f64::NAN, f64::NAN) };
        fits.push(SlopeFit { sigma, predicted: predicted_exponent(first.variant, sigma, first.q), slope, residual });
    }
    let diagnostics = results
        .iter()
        .map(|r| {
            let rep = report_from_blocks(&r.cfg, r.t, r.blocks.clone());
            let alignment = r
                .blocks
                .iter()
                .map(|b| b.main.value / b.main.coefficient_sum)
                .fold(f64::INFINITY, f64::min);
            let sup_gap = r
                .data_u1
                .1
                .iter()
                .chain(&r.data_u2.1)
                .map(|(_, s)| (s.upper - s.value) / s.upper)
                .fold(0.0, f64::max);
            SizeDiagnostics {
                m: r.cfg.m(),
                audit_margin: r.audit_margin,
                alignment,
                sup_gap,
                surrogate_min: rep.surrogate_ratios.iter().cloned().fold(f64::INFINITY, f64::min),
                surrogate_max: rep.surrogate_ratios.iter().cloned().fold(0.0, f64::max),
            }
        })
        .collect();
    Ok(InflationReport {
        variant: first.variant,
        eps: first.eps,
        delta: first.delta,
        q: first.q,
        rows,
        fits,
        comparison_constant: comparison,
        diagnostics,
    })
}

/// Desk family over `m ∈ ms`.
pub fn desk_family(variant: Variant, ms: &[usize], eps: f64, q: f64) -> Result<Vec<InflationConfig>> {
    ms.iter().map(|&m| InflationConfig::desk(variant, m, eps, 0.0, q)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RemainderRow {
    pub delta: f64,
    /// `‖u(t) - δ e^{tΔ}u⁰ - δ² v(t)‖_∞`.
    pub remainder: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RemainderReport {
    pub t: f64,
    pub rows: Vec<RemainderRow>,
    pub slope: f64,
    pub residual: f64,
}

/// Solves with data `δ u⁰` on a dense grid and measures the part beyond the second iterate.
pub fn remainder_experiment(
    cfg: &InflationConfig,
    grid: GridSpec,
    deltas: &[f64],
    tol: f64,
) -> Result<RemainderReport> {
    if deltas.len() < 2 || deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Invalid("delta sweep needs at least two positive values".into()));
    }
    let t = cfg.t_star();
    let u0 = build_initial_data(cfg, grid)?;
    let times = TimeGrid::log_spaced(t, 8, 1e-4)?;
    let kp = KatoParams::new(cfg.sigma, cfg.q, t)?;
    let heat = heat_trajectory(&u0, &times)?;
    let (v, _) = duhamel_all(&heat, &heat)?;
    let h = heat.last().clone();
    let v = v.last().cloned().ok_or_else(|| Error::Numerical("empty trajectory".into()))?;
    let mut rows = Vec::new();
    for &delta in deltas {
        let (traj, diag) = picard_solve(&u0.scaled(delta), &times, &kp, tol, 80)?;
        if !diag.converged {
            return Err(Error::Numerical(format!("picard did not converge at delta = {delta}: {}", diag.reason)));
        }
        let w = traj.last().sub(&h.scaled(delta))?.sub(&v.scaled(delta * delta))?;
        rows.push(RemainderRow {
            delta,
            remainder: w.lp_norm(f64::INFINITY)?,
            iterations: diag.iterations,
            converged: diag.converged,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.delta).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.remainder).collect();
    let (slope, residual) = loglog_fit(&xs, &ys)?;
    Ok(RemainderReport { t, rows, slope, residual })
}

/// Experiment description read by the `inflate` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub variant: Variant,
    #[serde(rename = "K_A", default)]
    pub k_a: Option<Vec<i32>>,
    #[serde(rename = "K_B", default)]
    pub k_b: Option<Vec<i32>>,
    #[serde(rename = "m-range", default)]
    pub m_range: Option<[usize; 2]>,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(rename = "delta-sweep", default)]
    pub delta_sweep: Option<Vec<f64>>,
    #[serde(rename = "sigma-list")]
    pub sigma_list: Vec<f64>,
    #[serde(with = "exponent")]
    pub q: f64,
    #[serde(rename = "N", default)]
    pub size: Option<u64>,
    #[serde(rename = "t-rule", default)]
    pub t_rule: TimeRule,
    #[serde(rename = "bump-scale", default)]
    pub bump_scale: Option<f64>,
    #[serde(default)]
    pub translation: Translation,
}

fn default_n() -> usize {
    3
}

fn default_eps() -> f64 {
    0.125
}

impl ExperimentConfig {
    /// One configuration per `m` (preset) or the single explicit configuration.
    pub fn family(&self) -> Result<Vec<InflationConfig>> {
        let delta = self.delta.unwrap_or(1.0);
        let sigma = self.sigma_list.first().copied().unwrap_or(0.0);
        let out: Vec<InflationConfig> = match (&self.k_a, &self.k_b, self.m_range) {
            (Some(a), Some(b), None) => vec![InflationConfig {
                n: self.n,
                variant: self.variant,
                k_a: a.clone(),
                k_b: b.clone(),
                eps: self.eps,
                delta,
                sigma,
                q: self.q,
                size: self.size,
                bump_scale: self.bump_scale.unwrap_or(DESK_BUMP_SCALE),
                translation: self.translation,
                t_rule: self.t_rule,
            }],
            (None, None, Some([lo, hi])) => {
                if lo > hi {
                    return Err(Error::Invalid(format!("empty m-range [{lo}, {hi}]")));
                }
                (lo..=hi)
                    .map(|m| {
                        let mut c = InflationConfig::desk(self.variant, m, self.eps, sigma, self.q)?;
                        c.n = self.n;
                        c.delta = delta;
                        c.size = self.size;
                        c.t_rule = self.t_rule;
                        c.translation = self.translation;
                        if let Some(r) = self.bump_scale {
                            c.bump_scale = r;
                        }
                        Ok(c)
                    })
                    .collect::<Result<_>>()?
            }
            _ => return Err(Error::Invalid("give either K_A and K_B, or m-range".into())),
        };
        for c in &out {
            c.validate()?;
        }
        Ok(out)
    }
}

/// Sum of `|K_A|` single-index terms `(1 - e^{-t 2^{2k+1}})`: the saturation level of the resonance.
pub fn saturation(cfg: &InflationConfig, t: f64) -> f64 {
    cfg.k_a.iter().map(|&k| -(-t * (2.0 * k as f64 + 1.0).exp2()).exp_m1()).sum()
}

/// `l^q` combination helper shared with the command line.
pub fn lq(values: &[f64], q: f64) -> f64 {
    lq_sum(values, q)
}

/// Largest relative divergence `max|ξ·û| / (max|ξ| max|û|)` of the sparse data.
pub fn divergence_defect(data: &InitialData) -> f64 {
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for ((k, a), (_, b)) in data.u1.modes().zip(data.u2.modes()) {
        let d = a * k[0] as f64 + b * k[1] as f64;
        worst = worst.max(d.norm());
        scale = scale.max(a.norm().max(b.norm()) * radius(&k));
    }
    if scale == 0.0 {
        0.0
    } else {
        worst / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::navier_stokes::tensor_divergence;

    fn desk(m: usize) -> InflationConfig {
        InflationConfig::desk(Variant::Main, m, 0.125, 0.0, f64::INFINITY).unwrap()
    }

    #[test]
    fn rho_profile() {
        assert_eq!(rho([0.1, 0.0, 0.0]), 1.0);
        assert_eq!(rho([0.0, 0.25, 0.0]), 0.0);
        let mut last = 1.0;
        for i in 0..=20 {
            let r = 5.0 / 32.0 + i as f64 * (3.0 / 16.0 - 5.0 / 32.0) / 20.0;
            let v = rho([r, 0.0, 0.0]);
            assert!(v <= last);
            last = v;
        }
    }

    #[test]
    fn carrier_vector_lengths() {
        let cv = carrier_vectors(3, 3, 0.25).unwrap();
        let n = |v: [f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        assert!((n(cv.a) - 8.0).abs() < 1e-12);
        for k in 1..40 {
            let cv = carrier_vectors(k, 3, 0.1).unwrap();
            assert!((n(cv.b) / n(cv.a) - 0.5).abs() < 1e-12);
            assert!((n(cv.c) / n(cv.a) - 1.0).abs() < 1e-12);
        }
        let b = carrier_vectors(1, 3, 0.25).unwrap().b;
        assert!((b[0] - 0.25).abs() < 1e-15 && (b[1] - 0.5).abs() < 1e-15);
        assert!((b[2] - 0.6875f64.sqrt()).abs() < 1e-15);
        assert!(carrier_vectors(3, 2, 0.25).is_err());
        assert!(carrier_vectors(3, 3, 0.5).is_err());
    }

    #[test]
    fn bump_weights_are_normalized() {
        let (off, w) = bump_weights(1.0);
        assert_eq!((off, w.clone()), (0, vec![1.0]));
        let (off, w) = bump_weights(256.0);
        assert_eq!(off, -47);
        assert_eq!(w.len(), 95);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn desk_preset_passes_audit() {
        let r = support_audit(&desk(4));
        assert!(r.pass, "{r:?}");
        assert!(r.conditions.iter().all(|c| c.worst_margin >= 0.0 || c.name == "sign-structure"));
    }

    #[test]
    fn paper_exponents_exceed_desk_grids() {
        let cfg = InflationConfig { k_a: vec![20], k_b: vec![8], size: Some(256), ..desk(1) };
        let r = geometric_audit(&cfg);
        assert!(!r.pass);
        assert!(!r.condition("dealiasing").unwrap().pass);
    }

    #[test]
    fn touching_index_sets_fail_block_separation() {
        let cfg = InflationConfig { k_a: vec![8], k_b: vec![8], bump_scale: 1.0, ..desk(1) };
        let r = geometric_audit(&cfg);
        assert!(!r.condition("block-separation").unwrap().pass);
    }

    #[test]
    fn data_is_real_and_divergence_free() {
        let data = sparse_initial_data(&desk(3)).unwrap();
        assert!(data.u1.hermitian_defect() < 1e-15);
        assert!(data.u2.hermitian_defect() < 1e-15);
        assert!(divergence_defect(&data) < 1e-10);
    }

    #[test]
    fn data_blocks_are_the_high_indices() {
        let cfg = desk(3);
        let data = sparse_initial_data(&cfg).unwrap();
        assert_eq!(data.u1.blocks_present(), cfg.k_a);
        for (r, t) in data.u1.runs.iter().zip(&data.tags) {
            let (lo, hi) = r.radial_range();
            let s = (t.k as f64).exp2();
            assert!(lo > 0.5 * s && hi < 2.0 * s);
        }
    }

    #[test]
    fn functionals_are_quadratic_in_delta() {
        let cfg = desk(2);
        let a = functionals(&cfg, cfg.t_star()).unwrap();
        let b = functionals(&InflationConfig { delta: 0.37, ..cfg.clone() }, cfg.t_star()).unwrap();
        for (x, y) in [(a.main, b.main), (a.cross, b.cross), (a.pressure, b.pressure), (a.full, b.full)] {
            assert!((y - 0.37 * 0.37 * x).abs() <= 1e-12 * x.abs());
        }
    }

    #[test]
    fn functional_vanishes_as_time_shrinks() {
        let cfg = desk(2);
        let t = cfg.t_star();
        let big = functionals(&cfg, t).unwrap().main;
        let small = functionals(&cfg, t * 1e-9).unwrap().main;
        assert!(small < 1e-6 * big);
    }

    #[test]
    fn cross_term_cancels_when_second_component_opposes_first() {
        let cfg = desk(2);
        let mut data = sparse_initial_data(&cfg).unwrap();
        data.u2 = data.u1.scaled(-1.0);
        let rows = tensor_blocks(&data, &cfg.k_b, Kernel::Duhamel(cfg.t_star())).unwrap();
        assert!(rows.iter().all(|r| r.cross == 0.0));
        assert!(rows.iter().all(|r| r.main.value > 0.0));
    }

    #[test]
    fn resonant_blocks_have_aligned_spectra() {
        let r = support_audit(&desk(3));
        assert!(r.condition("sign-structure").unwrap().pass);
    }

    #[test]
    fn sparse_products_match_dense_projection() {
        let cfg = InflationConfig::dense_companion(0.25).unwrap();
        let grid = GridSpec::periodic(3, 64).unwrap();
        let u = build_initial_data(&cfg, grid).unwrap();
        let (dense, clipped) = tensor_divergence(&u, &u).unwrap();
        assert!(!clipped);
        let mut data = sparse_initial_data(&cfg).unwrap();
        data.u1 = data.u1.scaled(data.amplitude);
        data.u2 = data.u2.scaled(data.amplitude);
        let t = bilinear(&[&data.u1, &data.u2], &[(0, 0), (1, 0), (1, 1)], Kernel::Instant, |_, _| true).unwrap();
        let scale = dense.max_abs();
        let mut worst: f64 = 0.0;
        for (k, v) in t {
            let (x1, x2) = (k[0] as f64, k[1] as f64);
            let n2 = sparse::norm2(&k) as f64;
            if n2 == 0.0 {
                continue;
            }
            let i = Complex64::i();
            let w1 = i * x1 * v[0] + i * x2 * v[1];
            let pr = i * x1 * (x1 * x1 * v[0] + 2.0 * x1 * x2 * v[1] + x2 * x2 * v[2]) / n2;
            worst = worst.max((dense.coeff(0, &k) - (w1 - pr)).norm());
        }
        assert!(worst <= 1e-10 * scale, "{worst} vs {scale}");
    }

    #[test]
    fn dense_data_matches_sparse_norms() {
        let cfg = InflationConfig::dense_companion(0.25).unwrap();
        let grid = GridSpec::periodic(3, 32).unwrap();
        let u = build_initial_data(&cfg, grid).unwrap();
        let data = sparse_initial_data(&cfg).unwrap();
        let dense = u.select(0).lp_norm(f64::INFINITY).unwrap();
        let sparse = data.amplitude * sup_norm(&data.u1).unwrap().value;
        assert!(dense <= sparse * (1.0 + 1e-12));
        assert!(sparse <= dense * 1.05);
        assert!(crate::navier_stokes::divergence_defect(&u) < 1e-10);
    }

    #[test]
    fn loglog_fit_recovers_power() {
        let x = [2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.7)).collect();
        let (s, r) = loglog_fit(&x, &y).unwrap();
        assert!((s - 1.7).abs() < 1e-12 && r < 1e-12);
    }

    #[test]
    fn experiment_config_reads_inf_and_presets() {
        let json = r#"{"variant":"main","m-range":[2,3],"eps":0.125,"sigma-list":[0,0.5],"q":"inf"}"#;
        let e: ExperimentConfig = serde_json::from_str(json).unwrap();
        assert!(e.q.is_infinite());
        let fam = e.family().unwrap();
        assert_eq!(fam.len(), 2);
        assert_eq!(fam[1].k_b, vec![16, 20, 24]);
        assert_eq!(fam[1].k_a, vec![28, 29, 30]);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"sigma-list":[0],"q":2,"bogus":1}"#).is_err());
    }
}
