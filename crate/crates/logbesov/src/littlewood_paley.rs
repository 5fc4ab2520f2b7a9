//! Smooth dyadic windows and the inhomogeneous Littlewood-Paley decomposition.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::core_field::{GridSpec, SpectralField};
use crate::error::{Error, Result};

fn h(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// Smooth step: 0 for `s <= 0`, 1 for `s >= 1`.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let a = h(s);
    a / (a + h(1.0 - s))
}

/// Radial cutoff: 1 up to 5/4, 0 from 3/2 on, nonincreasing and smooth in between.
pub fn phi(r: f64) -> f64 {
    if r <= 1.25 {
        1.0
    } else if r >= 1.5 {
        0.0
    } else {
        smooth_step((1.5 - r) / 0.25)
    }
}

pub fn psi(r: f64) -> f64 {
    phi(r) - phi(2.0 * r)
}

/// `ψ_j` at radius `r = |ξ|`.
pub fn psi_j(r: f64, j: i32) -> f64 {
    let scale = (-j as f64).exp2();
    phi(scale * r) - phi(2.0 * scale * r)
}

/// Window family tied to a grid; `jmax` is the last block with full support below Nyquist.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DyadicWindows {
    pub jmax: usize,
}

impl DyadicWindows {
    pub fn for_grid(grid: &GridSpec) -> Self {
        Self { jmax: grid.default_jmax() }
    }

    pub fn low(&self, r: f64) -> f64 {
        phi(r)
    }

    pub fn block(&self, r: f64, j: usize) -> f64 {
        psi_j(r, j as i32)
    }
}

fn radius(xi: [f64; 3]) -> f64 {
    (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt()
}

/// `S_0 u`.
pub fn low_pass(u: &SpectralField) -> Result<SpectralField> {
    u.apply_multiplier(|xi| Complex64::new(phi(radius(xi)), 0.0))
}

/// `Δ_j u` for `1 <= j <= jmax(grid)`.
pub fn lp_block(u: &SpectralField, j: usize) -> Result<SpectralField> {
    let jmax = u.grid().default_jmax();
    if j == 0 || j > jmax {
        return Err(Error::Invalid(format!(
            "block {j} outside 1..={jmax}: its annulus reaches the Nyquist frequency"
        )));
    }
    u.apply_multiplier(|xi| Complex64::new(psi_j(radius(xi), j as i32), 0.0))
}

/// `[S_0 u, Δ_1 u, …, Δ_jmax u]`.
pub fn decompose(u: &SpectralField, jmax: usize) -> Result<Vec<SpectralField>> {
    let mut out = Vec::with_capacity(jmax + 1);
    out.push(low_pass(u)?);
    for j in 1..=jmax {
        out.push(lp_block(u, j)?);
    }
    Ok(out)
}

fn residual_at(r: f64, jmax: usize) -> f64 {
    let mut s = phi(r);
    for j in 1..=jmax {
        s += psi_j(r, j as i32);
    }
    (1.0 - s).abs()
}

fn max_residual(grid: &GridSpec, jmax: usize, cutoff: Option<f64>) -> f64 {
    (0..grid.points())
        .into_par_iter()
        .map(|i| {
            let k = grid.wavevector(i);
            if grid.is_nyquist(&k) {
                return 0.0;
            }
            let r = grid.xi_norm(&k);
            match cutoff {
                Some(c) if r > c => 0.0,
                _ => residual_at(r, jmax),
            }
        })
        .reduce(|| 0.0, f64::max)
}

/// Largest `|1 - φ - Σ ψ_j|` over representable wavevectors with `|ξ| <= 5·2^{jmax-2}`.
pub fn partition_residual(grid: &GridSpec, jmax: usize) -> f64 {
    max_residual(grid, jmax, Some(5.0 * (jmax as f64 - 2.0).exp2()))
}

/// Same defect measured over every representable wavevector below Nyquist.
pub fn partition_residual_full(grid: &GridSpec, jmax: usize) -> f64 {
    max_residual(grid, jmax, None)
}
