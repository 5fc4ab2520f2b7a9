//! Periodic grids, real fields stored by Fourier coefficient, transforms and L^p norms.
//!
//! Coefficients follow `u(x) = Σ_k c_k exp(i 2π k·x / L)`, so a single coefficient of
//! size one paired with its conjugate is `2 cos(...)` in physical space.

pub mod fft;
pub mod io;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer wavevector; unused trailing entries are zero when `n = 2`.
pub type Wavevector = [i64; 3];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub size: usize,
    pub length: f64,
}

impl GridSpec {
    pub fn new(n: usize, size: usize, length: f64) -> Result<Self> {
        if n != 2 && n != 3 {
            return Err(Error::Dimension(n));
        }
        if size < 8 || !size.is_power_of_two() {
            return Err(Error::GridSize(size));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Invalid(format!("period length must be positive, got {length}")));
        }
        Ok(Self { n, size, length })
    }

    /// Grid on `[0, 2π)^n`, where lattice and physical wavevectors coincide.
    pub fn periodic(n: usize, size: usize) -> Result<Self> {
        Self::new(n, size, 2.0 * std::f64::consts::PI)
    }

    pub fn points(&self) -> usize {
        self.size.pow(self.n as u32)
    }

    pub fn half(&self) -> i64 {
        (self.size / 2) as i64
    }

    /// Largest dyadic block whose annulus stays below the Nyquist frequency.
    pub fn default_jmax(&self) -> usize {
        let kmax = std::f64::consts::PI * self.size as f64 / self.length;
        let log = (kmax * (1.0 + 1e-12)).log2().floor() as i64;
        (log - 1).max(1) as usize
    }

    /// Largest `|ξ|` along a coordinate axis below the Nyquist row.
    pub fn axis_xi_max(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.length * (self.half() - 1) as f64
    }

    pub fn axis_wavenumber(&self, i: usize) -> i64 {
        let i = i as i64;
        if i < self.half() {
            i
        } else {
            i - self.size as i64
        }
    }

    pub fn wavevector(&self, flat: usize) -> Wavevector {
        let mut k = [0i64; 3];
        let mut rest = flat;
        for axis in (0..self.n).rev() {
            k[axis] = self.axis_wavenumber(rest % self.size);
            rest /= self.size;
        }
        k
    }

    /// Storage index of a representable wavevector.
    pub fn flat_index(&self, k: &Wavevector) -> Option<usize> {
        let mut flat = 0usize;
        for (axis, &ki) in k.iter().enumerate() {
            if axis >= self.n {
                if ki != 0 {
                    return None;
                }
                continue;
            }
            if ki < -self.half() || ki >= self.half() {
                return None;
            }
            flat = flat * self.size + ki.rem_euclid(self.size as i64) as usize;
        }
        Some(flat)
    }

    pub fn is_nyquist(&self, k: &Wavevector) -> bool {
        k[..self.n].iter().any(|&ki| ki == -self.half())
    }

    /// Index of `-k` for the mode stored at `flat`.
    pub fn mirror_index(&self, flat: usize) -> usize {
        let mut out = 0usize;
        let mut rest = flat;
        let mut mult = 1usize;
        for _ in 0..self.n {
            let i = rest % self.size;
            rest /= self.size;
            out += ((self.size - i) % self.size) * mult;
            mult *= self.size;
        }
        out
    }

    /// Physical wavevector `2πk/L`.
    pub fn xi(&self, k: &Wavevector) -> [f64; 3] {
        let s = 2.0 * std::f64::consts::PI / self.length;
        [k[0] as f64 * s, k[1] as f64 * s, k[2] as f64 * s]
    }

    pub fn xi_norm(&self, k: &Wavevector) -> f64 {
        let x = self.xi(k);
        (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
    }

    pub fn cell_volume(&self) -> f64 {
        (self.length / self.size as f64).powi(self.n as i32)
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.n as i32)
    }

    /// Grid coordinates of a physical point index.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let mut x = [0.0; 3];
        let mut rest = flat;
        let h = self.length / self.size as f64;
        for axis in (0..self.n).rev() {
            x[axis] = (rest % self.size) as f64 * h;
            rest /= self.size;
        }
        x
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Physical,
    Spectral,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Physical => "physical",
            Domain::Spectral => "spectral",
        }
    }
}

/// Real field with `components` entries per point, held in one of the two domains.
///
/// Storage is component-major; within a component the order is row-major with
/// FFT ordering per axis (`0, 1, …, N/2-1, -N/2, …, -1`).
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    components: usize,
    domain: Domain,
    data: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: GridSpec, components: usize, domain: Domain) -> Self {
        Self {
            grid,
            components,
            domain,
            data: vec![Complex64::default(); components * grid.points()],
        }
    }

    pub fn from_data(
        grid: GridSpec,
        components: usize,
        domain: Domain,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        if components == 0 || data.len() != components * grid.points() {
            return Err(Error::Mismatch(format!(
                "expected {} values, got {}",
                components * grid.points(),
                data.len()
            )));
        }
        Ok(Self { grid, components, domain, data })
    }

    /// Physical field from per-component sample closures evaluated at grid points.
    pub fn from_fn<F: Fn([f64; 3]) -> Vec<f64>>(grid: GridSpec, components: usize, f: F) -> Self {
        let p = grid.points();
        let mut out = Self::zeros(grid, components, Domain::Physical);
        for flat in 0..p {
            let v = f(grid.point(flat));
            for (c, val) in v.into_iter().enumerate().take(components) {
                out.data[c * p + flat] = Complex64::new(val, 0.0);
            }
        }
        out
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let p = self.grid.points();
        &self.data[c * p..(c + 1) * p]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let p = self.grid.points();
        &mut self.data[c * p..(c + 1) * p]
    }

    /// Coefficient of a spectral field, zero for unrepresentable wavevectors.
    pub fn coeff(&self, c: usize, k: &Wavevector) -> Complex64 {
        match self.grid.flat_index(k) {
            Some(i) => self.data[c * self.grid.points() + i],
            None => Complex64::default(),
        }
    }

    /// Single-component copy of one component.
    pub fn select(&self, c: usize) -> SpectralField {
        Self {
            grid: self.grid,
            components: 1,
            domain: self.domain,
            data: self.component(c).to_vec(),
        }
    }

    /// Concatenate fields on a common grid and domain into one multi-component field.
    pub fn stack(parts: &[SpectralField]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::Invalid("nothing to stack".into()))?;
        let mut data = Vec::new();
        let mut components = 0;
        for f in parts {
            if f.grid != first.grid || f.domain != first.domain {
                return Err(Error::Mismatch("stacked fields differ in grid or domain".into()));
            }
            data.extend_from_slice(&f.data);
            components += f.components;
        }
        Self::from_data(first.grid, components, first.domain, data)
    }

    /// Band-limited real field from listed modes; conjugate partners are added automatically.
    pub fn synthesize(
        grid: GridSpec,
        components: usize,
        modes: &[(Wavevector, Vec<Complex64>)],
    ) -> Result<Self> {
        let mut out = Self::zeros(grid, components, Domain::Spectral);
        let p = grid.points();
        for (k, amps) in modes {
            if grid.is_nyquist(k) {
                return Err(Error::Nyquist(k[..grid.n].to_vec()));
            }
            let i = grid.flat_index(k).ok_or_else(|| Error::Nyquist(k[..grid.n].to_vec()))?;
            let j = grid.mirror_index(i);
            for (c, a) in amps.iter().enumerate().take(components) {
                if i == j {
                    out.data[c * p + i] += Complex64::new(a.re, 0.0);
                } else {
                    out.data[c * p + i] += a;
                    out.data[c * p + j] += a.conj();
                }
            }
        }
        Ok(out)
    }

    fn require(&self, domain: Domain) -> Result<()> {
        if self.domain != domain {
            return Err(Error::Domain { expected: domain.as_str(), found: self.domain.as_str() });
        }
        Ok(())
    }

    /// Move the field to `target`; the field must currently be in the other domain.
    pub fn transform(&self, target: Domain) -> Result<Self> {
        match target {
            Domain::Physical => self.to_physical(),
            Domain::Spectral => self.to_spectral(),
        }
    }

    pub fn to_physical(&self) -> Result<Self> {
        self.require(Domain::Spectral)?;
        let mut out = self.clone();
        out.domain = Domain::Physical;
        for c in 0..self.components {
            let comp = out.component_mut(c);
            fft::fft_nd(comp, self.grid.n, self.grid.size, true);
            for v in comp.iter_mut() {
                v.im = 0.0;
            }
        }
        Ok(out)
    }

    pub fn to_spectral(&self) -> Result<Self> {
        self.require(Domain::Physical)?;
        let mut out = self.clone();
        out.domain = Domain::Spectral;
        let scale = 1.0 / self.grid.points() as f64;
        for c in 0..self.components {
            let comp = out.component_mut(c);
            fft::fft_nd(comp, self.grid.n, self.grid.size, false);
            for v in comp.iter_mut() {
                *v *= scale;
            }
        }
        out.enforce_hermitian();
        Ok(out)
    }

    /// Spectral view of the field, transforming only when needed.
    pub fn spectral(&self) -> Result<Self> {
        match self.domain {
            Domain::Spectral => Ok(self.clone()),
            Domain::Physical => self.to_spectral(),
        }
    }

    pub fn physical(&self) -> Result<Self> {
        match self.domain {
            Domain::Physical => Ok(self.clone()),
            Domain::Spectral => self.to_physical(),
        }
    }

    /// Symmetrize `c(-k) = conj c(k)` and clear Nyquist modes.
    pub fn enforce_hermitian(&mut self) {
        let p = self.grid.points();
        let grid = self.grid;
        for c in 0..self.components {
            let comp = &mut self.data[c * p..(c + 1) * p];
            for i in 0..p {
                let k = grid.wavevector(i);
                if grid.is_nyquist(&k) {
                    comp[i] = Complex64::default();
                    continue;
                }
                let j = grid.mirror_index(i);
                if j < i {
                    continue;
                }
                if i == j {
                    comp[i].im = 0.0;
                } else {
                    let avg = (comp[i] + comp[j].conj()) * 0.5;
                    comp[i] = avg;
                    comp[j] = avg.conj();
                }
            }
        }
    }

    /// Largest `|c(-k) - conj c(k)|` over all modes.
    pub fn hermitian_defect(&self) -> f64 {
        let p = self.grid.points();
        let mut worst = 0.0f64;
        for c in 0..self.components {
            let comp = self.component(c);
            for i in 0..p {
                let j = self.grid.mirror_index(i);
                worst = worst.max((comp[j] - comp[i].conj()).norm());
            }
        }
        worst
    }

    /// Multiply every coefficient by `m(ξ)`, with ξ the physical wavevector.
    pub fn apply_multiplier<F: Fn([f64; 3]) -> Complex64>(&self, m: F) -> Result<Self> {
        self.require(Domain::Spectral)?;
        let p = self.grid.points();
        let mut out = self.clone();
        for i in 0..p {
            let k = self.grid.wavevector(i);
            if self.grid.is_nyquist(&k) {
                continue;
            }
            let v = m(self.grid.xi(&k));
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite(k[..self.grid.n].to_vec()));
            }
            for c in 0..self.components {
                out.data[c * p + i] *= v;
            }
        }
        Ok(out)
    }

    /// Apply a `c×c` matrix symbol (row-major) per wavevector.
    pub fn apply_matrix<F: Fn([f64; 3]) -> Vec<Complex64>>(&self, m: F) -> Result<Self> {
        self.require(Domain::Spectral)?;
        let p = self.grid.points();
        let nc = self.components;
        let mut out = Self::zeros(self.grid, nc, Domain::Spectral);
        let mut v = vec![Complex64::default(); nc];
        for i in 0..p {
            let k = self.grid.wavevector(i);
            if self.grid.is_nyquist(&k) {
                continue;
            }
            let mat = m(self.grid.xi(&k));
            if mat.len() != nc * nc {
                return Err(Error::Mismatch(format!("matrix symbol must be {nc}x{nc}")));
            }
            if mat.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::NonFinite(k[..self.grid.n].to_vec()));
            }
            for (c, slot) in v.iter_mut().enumerate() {
                *slot = self.data[c * p + i];
            }
            for r in 0..nc {
                let mut acc = Complex64::default();
                for c in 0..nc {
                    acc += mat[r * nc + c] * v[c];
                }
                out.data[r * p + i] = acc;
            }
        }
        Ok(out)
    }

    /// Grid L^p norm of the pointwise Euclidean length; `p = ∞` gives the grid maximum.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::Invalid(format!("L^p exponent must be >= 1, got {p}")));
        }
        let phys = self.physical()?;
        let np = self.grid.points();
        let mut acc = 0.0f64;
        for i in 0..np {
            let mut s = 0.0;
            for c in 0..self.components {
                let v = phys.data[c * np + i].re;
                s += v * v;
            }
            let a = s.sqrt();
            if p.is_infinite() {
                acc = acc.max(a);
            } else {
                acc += a.powf(p);
            }
        }
        if p.is_infinite() {
            Ok(acc)
        } else {
            Ok((self.grid.cell_volume() * acc).powf(1.0 / p))
        }
    }

    /// Sup norm of a scalar field with nonnegative real spectrum, as the coefficient sum.
    pub fn supnorm_nonneg_spectrum(&self) -> Result<f64> {
        self.require(Domain::Spectral)?;
        if self.components != 1 {
            return Err(Error::Invalid("nonnegative-spectrum sup norm needs a scalar field".into()));
        }
        let mut sum = 0.0;
        for (i, c) in self.data.iter().enumerate() {
            if c.re < -1e-12 || c.im.abs() > 1e-12 {
                let k = self.grid.wavevector(i);
                return Err(Error::NotNonnegative(k[..self.grid.n].to_vec()));
            }
            sum += c.re;
        }
        Ok(sum)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid
            || self.components != other.components
            || self.domain != other.domain
        {
            return Err(Error::Mismatch("fields differ in grid, components or domain".into()));
        }
        Ok(())
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        for v in out.data.iter_mut() {
            *v *= a;
        }
        out
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (v, w) in out.data.iter_mut().zip(&other.data) {
            *v += w * a;
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-1.0, other)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.norm()))
    }

    /// Sum of `|c_k|^2` over all components, in storage order.
    pub fn energy_coefficients(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// Random real band-limited field with coefficients uniform in the unit disc times `amp`
/// on `0 < |k| <= kmax`; the mean mode is left at zero.
pub fn random_field(grid: GridSpec, components: usize, kmax: f64, amp: f64, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = grid.points();
    let mut out = SpectralField::zeros(grid, components, Domain::Spectral);
    for c in 0..components {
        for i in 0..p {
            let k = grid.wavevector(i);
            let r = ((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt();
            let re: f64 = rng.gen_range(-1.0..1.0);
            let im: f64 = rng.gen_range(-1.0..1.0);
            if r == 0.0 || r > kmax || grid.is_nyquist(&k) {
                continue;
            }
            out.data[c * p + i] = Complex64::new(re, im) * amp;
        }
    }
    out.enforce_hermitian();
    out
}
