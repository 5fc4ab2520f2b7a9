//! Log-refined Besov norms `B^{s,σ}_{pq}` and their heat-flow characterization.

use num_complex::Complex64;
use serde::Serialize;

use crate::core_field::SpectralField;
use crate::error::{Error, Result};
use crate::littlewood_paley::{low_pass, lp_block};
use crate::path_norms::{log_weight, lq_dt_over_t, TimeGrid};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BesovParams {
    pub s: f64,
    pub sigma: f64,
    pub p: f64,
    pub q: f64,
    /// Truncation level; `None` means the grid default.
    pub jmax: Option<usize>,
}

impl BesovParams {
    pub fn new(s: f64, sigma: f64, p: f64, q: f64) -> Result<Self> {
        let out = Self { s, sigma, p, q, jmax: None };
        out.validate()?;
        Ok(out)
    }

    pub fn with_jmax(mut self, jmax: usize) -> Self {
        self.jmax = Some(jmax);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0) {
            return Err(Error::Invalid(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        if !(self.p >= 1.0) || !(self.q >= 1.0) {
            return Err(Error::Invalid(format!("p and q must lie in [1, inf], got {} and {}", self.p, self.q)));
        }
        if !self.s.is_finite() {
            return Err(Error::Invalid("s must be finite".into()));
        }
        if self.jmax == Some(0) {
            return Err(Error::Invalid("jmax must be >= 1".into()));
        }
        Ok(())
    }

    fn weight(&self, j: usize) -> f64 {
        (j as f64 * self.s).exp2() * (j as f64).powf(self.sigma)
    }
}

/// `σ_q = 1 - min(1 - 1/q, 1/q)`.
pub fn sigma_q(q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::Invalid(format!("q must be >= 1, got {q}")));
    }
    let inv = if q.is_infinite() { 0.0 } else { 1.0 / q };
    Ok(1.0 - (1.0 - inv).min(inv))
}

/// Reads a Lebesgue exponent; `inf` (or `infinity`, `∞`) stands for `∞`.
pub fn parse_exponent(s: &str) -> Result<f64> {
    let t = s.trim();
    let v = match t.to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => f64::INFINITY,
        other => other
            .parse::<f64>()
            .map_err(|_| Error::Invalid(format!("not an exponent: {t:?}")))?,
    };
    if !(v >= 1.0) {
        return Err(Error::Invalid(format!("exponent must lie in [1, inf], got {t}")));
    }
    Ok(v)
}

/// `l^q` norm of nonnegative entries.
pub fn lq_sum(values: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        values.iter().cloned().fold(0.0, f64::max)
    } else {
        values.iter().map(|v| v.powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

/// `‖S_0 u‖_p` and `‖Δ_j u‖_p` for `j = 1..=jmax`.
pub fn block_norms(u: &SpectralField, p: f64, jmax: usize) -> Result<(f64, Vec<f64>)> {
    let u = u.spectral()?;
    let low = low_pass(&u)?.lp_norm(p)?;
    let blocks = (1..=jmax)
        .map(|j| lp_block(&u, j)?.lp_norm(p))
        .collect::<Result<Vec<_>>>()?;
    Ok((low, blocks))
}

fn resolve_jmax(u: &SpectralField, params: &BesovParams) -> Result<usize> {
    params.validate()?;
    let cap = u.grid().default_jmax();
    let j = params.jmax.unwrap_or(cap);
    if j > cap {
        return Err(Error::Invalid(format!("jmax {j} exceeds grid capacity {cap}")));
    }
    Ok(j)
}

/// `‖S_0u‖_p + ‖{2^{js} j^σ ‖Δ_j u‖_p}_{j=1..jmax}‖_{l^q}`.
pub fn besov_norm(u: &SpectralField, params: &BesovParams) -> Result<f64> {
    let jmax = resolve_jmax(u, params)?;
    let (low, blocks) = block_norms(u, params.p, jmax)?;
    Ok(low + weighted_lq(&blocks, params, 1))
}

fn weighted_lq(blocks: &[f64], params: &BesovParams, first: usize) -> f64 {
    let terms: Vec<f64> = blocks
        .iter()
        .enumerate()
        .map(|(i, b)| params.weight(first + i) * b)
        .collect();
    lq_sum(&terms, params.q)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RestrictedNorm {
    pub value: f64,
    /// Set when the index set was empty.
    pub empty: bool,
}

/// Besov sum restricted to the blocks in `set`, without the low-frequency term.
pub fn besov_norm_restricted(u: &SpectralField, params: &BesovParams, set: &[usize]) -> Result<RestrictedNorm> {
    let cap = resolve_jmax(u, params)?;
    if set.is_empty() {
        return Ok(RestrictedNorm { value: 0.0, empty: true });
    }
    let u = u.spectral()?;
    let mut terms = Vec::with_capacity(set.len());
    for &j in set {
        if j == 0 || j > cap {
            return Err(Error::Invalid(format!("block {j} outside 1..={cap}")));
        }
        terms.push(params.weight(j) * lp_block(&u, j)?.lp_norm(params.p)?);
    }
    Ok(RestrictedNorm { value: lq_sum(&terms, params.q), empty: false })
}

/// Restricted sum from precomputed block norms; `norms[j]` belongs to block `j`.
pub fn restricted_from_blocks(norms: &[(usize, f64)], params: &BesovParams) -> f64 {
    let terms: Vec<f64> = norms.iter().map(|&(j, v)| params.weight(j) * v).collect();
    lq_sum(&terms, params.q)
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeatCharParams {
    pub t0: f64,
    pub gamma: f64,
    pub grid: TimeGrid,
}

impl HeatCharParams {
    pub fn new(t0: f64, gamma: f64) -> Result<Self> {
        Ok(Self { t0, gamma, grid: TimeGrid::new(t0)? })
    }
}

/// `‖e^{t0Δ}u‖_p + ‖t^{-s/2} |ln(t/(e t0))|^σ ‖(√t|ξ|)^γ e^{tΔ}u‖_p‖_{L^q(dt/t)}`.
pub fn heat_char_norm(u: &SpectralField, params: &BesovParams, hc: &HeatCharParams) -> Result<f64> {
    params.validate()?;
    if !(hc.gamma >= 0.0 && hc.gamma > params.s) {
        return Err(Error::Invalid(format!(
            "smoothing exponent {} must be >= 0 and exceed s = {}",
            hc.gamma, params.s
        )));
    }
    if ((hc.grid.horizon() - hc.t0) / hc.t0).abs() > 1e-12 {
        return Err(Error::Mismatch("time grid horizon differs from t0".into()));
    }
    let u = u.spectral()?;
    let heat_at = |t: f64| -> Result<SpectralField> {
        let gamma = hc.gamma;
        u.apply_multiplier(|xi| {
            let r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
            let smooth = if gamma == 0.0 { 1.0 } else { (t * r2).sqrt().powf(gamma) };
            Complex64::new(smooth * (-t * r2).exp(), 0.0)
        })
    };
    let base = u
        .apply_multiplier(|xi| Complex64::new((-hc.t0 * (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2])).exp(), 0.0))?
        .lp_norm(params.p)?;
    let mut w = Vec::with_capacity(hc.grid.len());
    for &t in hc.grid.nodes() {
        let v = heat_at(t)?.lp_norm(params.p)?;
        w.push(t.powf(-params.s / 2.0) * log_weight(t, hc.t0).powf(params.sigma) * v);
    }
    Ok(base + lq_dt_over_t(&hc.grid, &w, params.q))
}

#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingRow {
    pub smaller: BesovParams,
    pub larger: BesovParams,
    pub smaller_norm: f64,
    pub larger_norm: f64,
    /// `smaller_norm / larger_norm`, the constant needed for this field.
    pub constant: f64,
}

/// For each pair `(a, b)`, report `‖u‖_a ≤ C‖u‖_b` with the measured `C`.
pub fn embedding_report(u: &SpectralField, pairs: &[(BesovParams, BesovParams)]) -> Result<Vec<EmbeddingRow>> {
    pairs
        .iter()
        .map(|(a, b)| {
            if a.p != b.p {
                return Err(Error::Invalid("embedding pairs must share p".into()));
            }
            let na = besov_norm(u, a)?;
            let nb = besov_norm(u, b)?;
            let constant = if nb == 0.0 { 0.0 } else { na / nb };
            Ok(EmbeddingRow { smaller: *a, larger: *b, smaller_norm: na, larger_norm: nb, constant })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_field::{random_field, GridSpec};

    fn mode36() -> SpectralField {
        let g = GridSpec::periodic(2, 128).unwrap();
        SpectralField::synthesize(g, 1, &[([36, 0, 0], vec![Complex64::new(1.0, 0.0)])]).unwrap()
    }

    #[test]
    fn sigma_q_values() {
        assert_eq!(sigma_q(1.0).unwrap(), 1.0);
        assert_eq!(sigma_q(2.0).unwrap(), 0.5);
        assert_eq!(sigma_q(4.0).unwrap(), 0.75);
        assert_eq!(sigma_q(f64::INFINITY).unwrap(), 1.0);
        assert!(sigma_q(0.5).is_err());
    }

    #[test]
    fn single_block_closed_form() {
        let u = mode36();
        for q in [1.0, 2.0, 4.0, f64::INFINITY] {
            let p = BesovParams::new(-1.0, 1.0, f64::INFINITY, q).unwrap();
            assert!((besov_norm(&u, &p).unwrap() - 0.3125).abs() < 1e-13);
            let r = besov_norm_restricted(&u, &p, &[5]).unwrap();
            assert!((r.value - 0.3125).abs() < 1e-13);
            assert_eq!(besov_norm_restricted(&u, &p, &[2, 3]).unwrap().value, 0.0);
            assert!(besov_norm_restricted(&u, &p, &[]).unwrap().empty);
        }
        let z = SpectralField::zeros(*u.grid(), 1, u.domain());
        let p = BesovParams::new(-1.0, 1.0, 2.0, 2.0).unwrap();
        assert_eq!(besov_norm(&z, &p).unwrap(), 0.0);
    }

    #[test]
    fn full_restriction_drops_low_term() {
        let g = GridSpec::periodic(2, 64).unwrap();
        let u = random_field(g, 1, 20.0, 1.0, 9);
        let p = BesovParams::new(-1.0, 0.5, 2.0, 2.0).unwrap();
        let all: Vec<usize> = (1..=g.default_jmax()).collect();
        let low = low_pass(&u).unwrap().lp_norm(2.0).unwrap();
        let full = besov_norm(&u, &p).unwrap();
        let r = besov_norm_restricted(&u, &p, &all).unwrap().value;
        assert!((full - low - r).abs() < 1e-12 * full);
    }

    #[test]
    fn heat_char_single_mode_peak() {
        let u = mode36();
        let p = BesovParams::new(-1.0, 0.0, f64::INFINITY, f64::INFINITY).unwrap();
        let hc = HeatCharParams::new(1.0, 0.0).unwrap();
        let v = heat_char_norm(&u, &p, &hc).unwrap();
        let oracle = 2.0 / (2.0 * 1296.0 * std::f64::consts::E).sqrt();
        assert!((v - oracle).abs() < 1e-4 * oracle, "{v} vs {oracle}");
        let bad = HeatCharParams::new(1.0, -2.0);
        assert!(heat_char_norm(&u, &p, &bad.unwrap()).is_err());
    }
}
