//! Sparse spectra on the integer lattice: exact bilinear products with closed-form heat
//! kernels, Littlewood-Paley blocks and sup-norm estimates for lacunary trigonometric sums.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::littlewood_paley::{phi, psi_j};

/// Integer wavevector; with period `2π` it is also the physical frequency.
pub type Lattice = [i64; 3];

pub(crate) fn norm2(k: &Lattice) -> i128 {
    k.iter().map(|&x| x as i128 * x as i128).sum()
}

pub(crate) fn dot(a: &Lattice, b: &Lattice) -> i128 {
    a.iter().zip(b).map(|(&x, &y)| x as i128 * y as i128).sum()
}

pub(crate) fn radius(k: &Lattice) -> f64 {
    (norm2(k) as f64).sqrt()
}

fn add(a: &Lattice, b: &Lattice) -> Lattice {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Contiguous run of modes `start + i e1`, `i = 0..coeffs.len()`.
#[derive(Clone, Debug, PartialEq)]
pub struct Run {
    pub start: Lattice,
    pub coeffs: Vec<Complex64>,
}

impl Run {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn mode(&self, i: usize) -> Lattice {
        [self.start[0] + i as i64, self.start[1], self.start[2]]
    }

    /// Smallest and largest `|ξ|` over the run.
    pub fn radial_range(&self) -> (f64, f64) {
        radial_range(self.start, self.len())
    }
}

fn radial_range(start: Lattice, len: usize) -> (f64, f64) {
    let lo = start[0];
    let hi = start[0] + len as i64 - 1;
    let nearest = 0i64.clamp(lo, hi);
    let r = |x: i64| radius(&[x, start[1], start[2]]);
    (r(nearest), r(lo).max(r(hi)))
}

/// Real trigonometric polynomial stored as runs along the first axis.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseField {
    pub runs: Vec<Run>,
}

impl SparseField {
    /// Groups modes into runs; duplicate wavevectors are summed.
    pub fn from_modes(modes: Vec<(Lattice, Complex64)>) -> Self {
        let mut map: BTreeMap<(i64, i64, i64), Complex64> = BTreeMap::new();
        for (k, c) in modes {
            *map.entry((k[1], k[2], k[0])).or_default() += c;
        }
        let mut runs: Vec<Run> = Vec::new();
        for ((k1, k2, k0), c) in map {
            if let Some(last) = runs.last_mut() {
                if last.start[1] == k1 && last.start[2] == k2 && last.start[0] + last.len() as i64 == k0 {
                    last.coeffs.push(c);
                    continue;
                }
            }
            runs.push(Run { start: [k0, k1, k2], coeffs: vec![c] });
        }
        Self { runs }
    }

    pub fn modes(&self) -> impl Iterator<Item = (Lattice, Complex64)> + '_ {
        self.runs
            .iter()
            .flat_map(|r| r.coeffs.iter().enumerate().map(move |(i, &c)| (r.mode(i), c)))
    }

    pub fn mode_count(&self) -> usize {
        self.runs.iter().map(Run::len).sum()
    }

    /// Same geometry, coefficients replaced by `f(k, c)`.
    pub fn map(&self, f: impl Fn(&Lattice, Complex64) -> Complex64) -> Self {
        let runs = self
            .runs
            .iter()
            .map(|r| Run {
                start: r.start,
                coeffs: r.coeffs.iter().enumerate().map(|(i, &c)| f(&r.mode(i), c)).collect(),
            })
            .collect();
        Self { runs }
    }

    pub fn scaled(&self, a: f64) -> Self {
        self.map(|_, c| c * a)
    }

    /// Drops exact zeros and rebuilds the runs.
    pub fn pruned(&self) -> Self {
        Self::from_modes(self.modes().filter(|(_, c)| *c != Complex64::new(0.0, 0.0)).collect())
    }

    /// `Δ_j` of the field (`j ≥ 1`).
    pub fn block(&self, j: i32) -> Self {
        self.map(|k, c| c * psi_j(radius(k), j)).pruned()
    }

    /// `S_0` of the field.
    pub fn low(&self) -> Self {
        self.map(|k, c| c * phi(radius(k))).pruned()
    }

    /// Indices `j ≥ 1` whose window is nonzero somewhere on the support.
    pub fn blocks_present(&self) -> Vec<i32> {
        let mut set = std::collections::BTreeSet::new();
        for (k, c) in self.modes() {
            if c.norm() == 0.0 {
                continue;
            }
            let r = radius(&k);
            if r <= 0.0 {
                continue;
            }
            let base = r.log2().floor() as i32;
            for j in (base - 1).max(1)..=base + 2 {
                if psi_j(r, j) > 0.0 {
                    set.insert(j);
                }
            }
        }
        set.into_iter().collect()
    }

    /// Largest absolute component over the support.
    pub fn max_component(&self) -> i64 {
        self.modes().flat_map(|(k, _)| k.into_iter().map(i64::abs)).max().unwrap_or(0)
    }

    /// Pointwise value; intended for moderate frequencies.
    pub fn evaluate(&self, x: [f64; 3]) -> f64 {
        self.modes()
            .map(|(k, c)| {
                let ph = k[0] as f64 * x[0] + k[1] as f64 * x[1] + k[2] as f64 * x[2];
                (c * Complex64::from_polar(1.0, ph)).re
            })
            .sum()
    }

    /// Largest `|c(k) - conj c(-k)|` relative to the largest coefficient.
    pub fn hermitian_defect(&self) -> f64 {
        let map: HashMap<Lattice, Complex64> = self.modes().collect();
        let scale = map.values().map(|c| c.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        map.iter()
            .map(|(k, c)| {
                let m = map.get(&[-k[0], -k[1], -k[2]]).copied().unwrap_or_default();
                (c - m.conj()).norm()
            })
            .fold(0.0, f64::max)
            / scale
    }
}

/// Time weight attached to a product of two modes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kernel {
    /// Plain product `F[uv]`.
    Instant,
    /// `∫_0^t e^{-(t-τ)|ξ|²} e^{-τ|η|²} e^{-τ|ζ|²} dτ` for `ξ = η + ζ`.
    Duhamel(f64),
}

impl Kernel {
    pub fn weight(&self, eta: &Lattice, zeta: &Lattice) -> f64 {
        match *self {
            Kernel::Instant => 1.0,
            Kernel::Duhamel(t) => {
                let xi = add(eta, zeta);
                let e = -2.0 * dot(eta, zeta) as f64;
                let x = t * e;
                let integral = if x.abs() < 1e-8 { t * (1.0 - 0.5 * x) } else { -(-x).exp_m1() / e };
                (-t * norm2(&xi) as f64).exp() * integral
            }
        }
    }
}

/// Coefficients `Σ_{η+ζ=ξ} a(η) b(ζ) K(η,ζ)` for several factor pairs at once.
///
/// Every field in `fields` must share the run geometry of `fields[0]`; `pairs` lists the
/// factor indices. Only run pairs whose output radial range satisfies `keep` contribute.
pub fn bilinear(
    fields: &[&SparseField],
    pairs: &[(usize, usize)],
    kernel: Kernel,
    keep: impl Fn(f64, f64) -> bool + Sync,
) -> Result<Vec<(Lattice, Vec<Complex64>)>> {
    let geometry = fields.first().ok_or_else(|| Error::Invalid("no factors given".into()))?;
    for f in fields {
        if f.runs.len() != geometry.runs.len()
            || f.runs.iter().zip(&geometry.runs).any(|(a, b)| a.start != b.start || a.len() != b.len())
        {
            return Err(Error::Mismatch("factor fields differ in support".into()));
        }
    }
    if pairs.iter().any(|&(a, b)| a >= fields.len() || b >= fields.len()) {
        return Err(Error::Invalid("factor index out of range".into()));
    }
    let np = pairs.len();
    let runs = &geometry.runs;
    let partial: Vec<Vec<(Lattice, Vec<Complex64>)>> = (0..runs.len())
        .into_par_iter()
        .map(|p| {
            let mut out = Vec::new();
            let rp = &runs[p];
            for (q, rq) in runs.iter().enumerate() {
                let start = add(&rp.start, &rq.start);
                let len = rp.len() + rq.len() - 1;
                let (lo, hi) = radial_range(start, len);
                if !keep(lo, hi) {
                    continue;
                }
                let mut acc = vec![Complex64::new(0.0, 0.0); np * len];
                for i in 0..rp.len() {
                    let eta = rp.mode(i);
                    for j in 0..rq.len() {
                        let w = kernel.weight(&eta, &rq.mode(j));
                        for (s, &(a, b)) in pairs.iter().enumerate() {
                            acc[(i + j) * np + s] += fields[a].runs[p].coeffs[i] * fields[b].runs[q].coeffs[j] * w;
                        }
                    }
                }
                for o in 0..len {
                    out.push(([start[0] + o as i64, start[1], start[2]], acc[o * np..(o + 1) * np].to_vec()));
                }
            }
            out
        })
        .collect();
    let mut map: HashMap<Lattice, Vec<Complex64>> = HashMap::new();
    for list in partial {
        for (k, v) in list {
            let e = map.entry(k).or_insert_with(|| vec![Complex64::new(0.0, 0.0); np]);
            for (a, b) in e.iter_mut().zip(v) {
                *a += b;
            }
        }
    }
    let mut out: Vec<_> = map.into_iter().collect();
    out.sort_by_key(|(k, _)| (k[1], k[2], k[0]));
    Ok(out)
}

/// Sup-norm of a real lacunary sum: `value` is attained at an explicit point, `upper`
/// bounds the sup through the transverse-group envelope.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SupEstimate {
    pub value: f64,
    pub upper: f64,
    /// `Σ|c(k)|`; equals the sup exactly when the spectrum is a translate of a nonnegative one.
    pub coefficient_sum: f64,
    pub groups: usize,
}

impl SupEstimate {
    /// Whether the attained value reaches the coefficient sum.
    pub fn aligned(&self, tol: f64) -> bool {
        self.coefficient_sum == 0.0 || self.value >= (1.0 - tol) * self.coefficient_sum
    }
}

struct Group {
    tau: [i64; 2],
    base: i64,
    terms: Vec<(i64, Complex64)>,
    factor: f64,
}

impl Group {
    fn envelope_at(&self, x: f64) -> f64 {
        let s: Complex64 = self.terms.iter().map(|&(d, c)| c * Complex64::from_polar(1.0, d as f64 * x)).sum();
        self.factor * s.norm()
    }
}

const SNAP_BITS: u32 = 40;

/// Estimates `sup_x |f(x)|` for a real field given by Hermitian sparse coefficients.
///
/// Modes are grouped by transverse components `(k2, k3)`; within a group the sum is a
/// trigonometric polynomial in `x1`. The envelope `Σ_g |Q_g(x1)|` bounds the field, and the
/// transverse coordinates are chosen to align the two strongest groups at the envelope peak.
pub fn sup_norm(field: &SparseField) -> Result<SupEstimate> {
    let mut raw: BTreeMap<(i64, i64), Vec<(i64, Complex64)>> = BTreeMap::new();
    let mut coefficient_sum = 0.0;
    for (k, c) in field.modes() {
        if c.norm() == 0.0 {
            continue;
        }
        coefficient_sum += c.norm();
        raw.entry((k[1], k[2])).or_default().push((k[0], c));
    }
    let mut groups: Vec<Group> = Vec::new();
    for ((t1, t2), terms) in raw {
        let zero = t1 == 0 && t2 == 0;
        if !zero && (t1 < 0 || (t1 == 0 && t2 < 0)) {
            continue;
        }
        let base = terms.iter().map(|t| t.0).min().unwrap_or(0);
        let terms = terms.into_iter().map(|(k, c)| (k - base, c)).collect();
        groups.push(Group { tau: [t1, t2], base, terms, factor: if zero { 1.0 } else { 2.0 } });
    }
    if groups.is_empty() {
        return Ok(SupEstimate { value: 0.0, upper: 0.0, coefficient_sum, groups: 0 });
    }
    let span = groups.iter().flat_map(|g| g.terms.iter().map(|t| t.0)).max().unwrap_or(0);
    let size = ((8 * (span + 1)) as usize).max(512).next_power_of_two();
    if size > 1 << 22 {
        return Err(Error::Invalid(format!("group spread {span} too wide for the sup-norm envelope")));
    }
    let fft = FftPlanner::new().plan_fft_inverse(size);
    let mut envelope = vec![0.0; size];
    for g in &groups {
        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        for &(d, c) in &g.terms {
            buf[d as usize] += c;
        }
        fft.process(&mut buf);
        for (e, v) in envelope.iter_mut().zip(&buf) {
            *e += g.factor * v.norm();
        }
    }
    let h = std::f64::consts::TAU / size as f64;
    let mut peaks: Vec<usize> = (0..size)
        .filter(|&i| {
            let l = envelope[(i + size - 1) % size];
            let r = envelope[(i + 1) % size];
            envelope[i] >= l && envelope[i] >= r
        })
        .collect();
    peaks.sort_by(|&a, &b| envelope[b].total_cmp(&envelope[a]).then(a.cmp(&b)));
    peaks.truncate(3);
    let env = |x: f64| groups.iter().map(|g| g.envelope_at(x)).sum::<f64>();
    let mut upper: f64 = 0.0;
    let mut value: f64 = 0.0;
    for &p in &peaks {
        let x = golden_max(&env, p as f64 * h - h, p as f64 * h + h);
        upper = upper.max(env(x)).max(envelope[p]);
        value = value.max(attained(&groups, x));
    }
    Ok(SupEstimate { value, upper: upper.max(value), coefficient_sum, groups: groups.len() })
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn cross(a: [i64; 2], b: [i64; 2]) -> i128 {
    a[0] as i128 * b[1] as i128 - a[1] as i128 * b[0] as i128
}

/// `|f|` at `x1` (snapped to a dyadic point) with transverse phases aligning the strongest groups.
fn attained(groups: &[Group], x: f64) -> f64 {
    let modulus = 1i128 << SNAP_BITS;
    let p = ((x / std::f64::consts::TAU) * modulus as f64).round() as i128;
    let p = p.rem_euclid(modulus);
    let xs = std::f64::consts::TAU * p as f64 / modulus as f64;
    let values: Vec<Complex64> = groups
        .iter()
        .map(|g| {
            let turns = (g.base as i128 * p).rem_euclid(modulus) as f64 / modulus as f64;
            let low: Complex64 = g.terms.iter().map(|&(d, c)| c * Complex64::from_polar(1.0, d as f64 * xs)).sum();
            low * Complex64::from_polar(1.0, std::f64::consts::TAU * turns)
        })
        .collect();
    let mut order: Vec<usize> = (0..groups.len()).filter(|&i| groups[i].factor == 2.0).collect();
    order.sort_by(|&a, &b| values[b].norm().total_cmp(&values[a].norm()).then(a.cmp(&b)));
    let zero: f64 = groups
        .iter()
        .zip(&values)
        .filter(|(g, _)| g.factor == 1.0)
        .map(|(_, v)| v.re)
        .sum();
    let Some(&first) = order.first() else {
        return zero.abs();
    };
    let t1 = groups[first].tau;
    let th1 = -values[first].arg();
    let second = order.iter().copied().find(|&i| cross(t1, groups[i].tau) != 0);
    let phase = |tau: [i64; 2]| -> f64 {
        match second {
            Some(s) => {
                let t2 = groups[s].tau;
                let th2 = -values[s].arg();
                let det = cross(t1, t2) as f64;
                th1 * (cross(tau, t2) as f64 / det) + th2 * (cross(t1, tau) as f64 / det)
            }
            None => {
                let n = t1[0] as i128 * t1[0] as i128 + t1[1] as i128 * t1[1] as i128;
                let d = tau[0] as i128 * t1[0] as i128 + tau[1] as i128 * t1[1] as i128;
                th1 * (d as f64 / n as f64)
            }
        }
    };
    let total: f64 = order
        .iter()
        .map(|&i| 2.0 * (values[i] * Complex64::from_polar(1.0, phase(groups[i].tau))).re)
        .sum::<f64>()
        + zero;
    total.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn hermitian(modes: &[(Lattice, Complex64)]) -> SparseField {
        let mut all = Vec::new();
        for &(k, v) in modes {
            all.push((k, v));
            all.push(([-k[0], -k[1], -k[2]], v.conj()));
        }
        SparseField::from_modes(all)
    }

    fn grid_max(f: &SparseField, n: usize) -> f64 {
        let h = std::f64::consts::TAU / n as f64;
        let mut best: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for d in 0..n {
                    best = best.max(f.evaluate([a as f64 * h, b as f64 * h, d as f64 * h]).abs());
                }
            }
        }
        best
    }

    #[test]
    fn runs_group_contiguous_modes() {
        let f = SparseField::from_modes(vec![
            ([3, 1, 0], c(1.0, 0.0)),
            ([1, 1, 0], c(1.0, 0.0)),
            ([2, 1, 0], c(1.0, 0.0)),
            ([5, 1, 0], c(1.0, 0.0)),
            ([2, 1, 0], c(1.0, 0.0)),
        ]);
        assert_eq!(f.runs.len(), 2);
        assert_eq!(f.runs[0].start, [1, 1, 0]);
        assert_eq!(f.runs[0].coeffs, vec![c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(f.mode_count(), 4);
    }

    #[test]
    fn radial_range_handles_sign_change() {
        let (lo, hi) = radial_range([-3, 4, 0], 7);
        assert_eq!(lo, 4.0);
        assert_eq!(hi, 5.0);
    }

    #[test]
    fn single_pair_sup_is_twice_modulus() {
        let f = hermitian(&[([7, 2, -3], c(0.3, -0.4))]);
        let s = sup_norm(&f).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        assert!((s.upper - 1.0).abs() < 1e-9);
        assert!(s.aligned(1e-12));
    }

    #[test]
    fn sup_matches_dense_evaluation_for_small_fields() {
        let f = hermitian(&[
            ([1, 1, 0], c(0.5, 0.2)),
            ([2, 1, 0], c(-0.3, 0.1)),
            ([1, 0, 1], c(0.25, 0.0)),
            ([0, 2, 1], c(0.0, 0.4)),
            ([3, 0, 0], c(0.1, 0.0)),
        ]);
        let s = sup_norm(&f).unwrap();
        let dense = grid_max(&f, 48);
        assert!(s.value <= s.upper + 1e-12);
        assert!(s.upper + 1e-9 >= dense, "upper {} dense {}", s.upper, dense);
        assert!(s.value >= 0.9 * dense, "value {} dense {}", s.value, dense);
    }

    #[test]
    fn instant_product_is_convolution() {
        let f = hermitian(&[([1, 0, 0], c(1.0, 0.0))]);
        let out = bilinear(&[&f], &[(0, 0)], Kernel::Instant, |_, _| true).unwrap();
        let get = |k: Lattice| out.iter().find(|(m, _)| *m == k).map(|(_, v)| v[0]).unwrap_or_default();
        assert_eq!(get([2, 0, 0]), c(1.0, 0.0));
        assert_eq!(get([0, 0, 0]), c(2.0, 0.0));
    }

    #[test]
    fn duhamel_kernel_matches_quadrature() {
        let eta = [5, 1, 0];
        let zeta = [-3, 2, 1];
        let t = 0.01;
        let k = Kernel::Duhamel(t).weight(&eta, &zeta);
        let (ne, nz, nx) = (26.0, 14.0, 14.0);
        let n = 20000;
        let h = t / n as f64;
        let num: f64 = (0..n)
            .map(|i| {
                let tau = (i as f64 + 0.5) * h;
                (-(t - tau) * nx - tau * (ne + nz)).exp() * h
            })
            .sum();
        assert!((k - num).abs() < 1e-10 * num);
    }

    #[test]
    fn blocks_present_lists_nonzero_windows() {
        let f = hermitian(&[([16, 0, 0], c(1.0, 0.0))]);
        assert_eq!(f.blocks_present(), vec![4]);
        let b = f.block(4);
        assert_eq!(b.mode_count(), 2);
        assert!(f.block(5).runs.is_empty());
    }
}
