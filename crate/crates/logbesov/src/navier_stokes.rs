//! Heat flow, Leray projection, the dealiased quadratic term, the Duhamel operator and
//! two solvers for the incompressible Navier-Stokes equations on the torus.
//!
//! The forcing is `N(u, v) = -P∇·(u⊗v)` with `(∇·(u⊗v))_i = Σ_j ∂_j(u_j v_i)`, so that
//! `u = e^{tΔ}u0 + B(u, u)` solves `∂_t u - Δu + P∇·(u⊗u) = 0`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::besov_norms::{besov_norm, BesovParams};
use crate::core_field::{Domain, GridSpec, SpectralField};
use crate::error::{Error, Result};
use crate::path_norms::{k_norm, KatoParams, TimeGrid, TimeSeries};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Picard,
    Rk4,
    HeatOnly,
}

/// Snapshots of a spectral vector field at increasing times.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub grid: GridSpec,
    pub times: Vec<f64>,
    /// Present when the times are the nodes of a log-spaced grid.
    pub timegrid: Option<TimeGrid>,
    pub snapshots: Vec<SpectralField>,
    pub provenance: Provenance,
}

impl Trajectory {
    pub fn last(&self) -> &SpectralField {
        self.snapshots.last().expect("trajectory has at least one snapshot")
    }

    fn require_timegrid(&self) -> Result<&TimeGrid> {
        self.timegrid
            .as_ref()
            .ok_or_else(|| Error::Invalid("path norms need a log-spaced trajectory".into()))
    }

    /// Scalar series `t ↦ ‖u(t)‖_∞`.
    pub fn sup_series(&self) -> Result<TimeSeries> {
        let grid = self.require_timegrid()?.clone();
        let values = self
            .snapshots
            .par_iter()
            .map(|s| s.lp_norm(f64::INFINITY))
            .collect::<Result<Vec<_>>>()?;
        TimeSeries::new(grid, values)
    }

    pub fn difference(&self, other: &Trajectory) -> Result<Trajectory> {
        if self.times != other.times || self.grid != other.grid {
            return Err(Error::Mismatch("trajectories differ in grid or times".into()));
        }
        let snapshots = self
            .snapshots
            .iter()
            .zip(&other.snapshots)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Trajectory { snapshots, ..self.clone() })
    }

    pub fn scaled(&self, a: f64) -> Trajectory {
        Trajectory {
            snapshots: self.snapshots.iter().map(|s| s.scaled(a)).collect(),
            ..self.clone()
        }
    }
}

/// `|ξ|²` per storage index.
fn xi2_table(grid: &GridSpec) -> Vec<f64> {
    (0..grid.points())
        .map(|i| {
            let x = grid.xi(&grid.wavevector(i));
            x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
        })
        .collect()
}

fn require_vector(u: &SpectralField) -> Result<()> {
    if u.components() != u.grid().n {
        return Err(Error::Mismatch(format!(
            "expected {} components, got {}",
            u.grid().n,
            u.components()
        )));
    }
    if u.domain() != Domain::Spectral {
        return Err(Error::Domain { expected: "spectral", found: u.domain().as_str() });
    }
    Ok(())
}

/// `e^{tΔ}u`.
pub fn heat(u: &SpectralField, t: f64) -> Result<SpectralField> {
    if !(t >= 0.0) {
        return Err(Error::Invalid(format!("heat time must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return u.spectral();
    }
    u.spectral()?
        .apply_multiplier(|x| Complex64::new((-t * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp(), 0.0))
}

/// Leray projection `(δ_ij - ξ_iξ_j/|ξ|²)`; the mean mode passes through.
pub fn leray(u: &SpectralField) -> Result<SpectralField> {
    require_vector(u)?;
    let n = u.grid().n;
    let grid = *u.grid();
    let p = grid.points();
    let mut out = u.clone();
    let data = out.data_mut();
    for i in 0..p {
        let k = grid.wavevector(i);
        if k == [0, 0, 0] {
            continue;
        }
        let x = grid.xi(&k);
        let r2: f64 = x[..n].iter().map(|v| v * v).sum();
        let dot: Complex64 = (0..n).map(|c| data[c * p + i] * x[c]).sum();
        for c in 0..n {
            data[c * p + i] -= dot * (x[c] / r2);
        }
    }
    Ok(out)
}

/// `max_k |ξ·û(k)| / max_k |û(k)|`, zero for the zero field.
pub fn divergence_defect(u: &SpectralField) -> f64 {
    let grid = *u.grid();
    let n = grid.n;
    let p = grid.points();
    let data = u.data();
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..p {
        let x = grid.xi(&grid.wavevector(i));
        let dot: Complex64 = (0..n).map(|c| data[c * p + i] * x[c]).sum();
        worst = worst.max(dot.norm());
        for c in 0..n {
            scale = scale.max(data[c * p + i].norm());
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        worst / scale
    }
}

/// Largest retained wavenumber per axis under the 2/3 rule.
pub fn dealias_cutoff(grid: &GridSpec) -> i64 {
    (grid.size / 3) as i64
}

fn truncate(u: &mut SpectralField) -> bool {
    let grid = *u.grid();
    let cut = dealias_cutoff(&grid);
    let p = grid.points();
    let comps = u.components();
    let data = u.data_mut();
    let mut clipped = false;
    for i in 0..p {
        let k = grid.wavevector(i);
        if k[..grid.n].iter().any(|v| v.abs() > cut) {
            for c in 0..comps {
                if data[c * p + i] != Complex64::default() {
                    clipped = true;
                    data[c * p + i] = Complex64::default();
                }
            }
        }
    }
    clipped
}

/// Dealiased `P∇·(u⊗v)`, with a flag raised when input content beyond the 2/3 cube was dropped.
pub fn tensor_divergence(u: &SpectralField, v: &SpectralField) -> Result<(SpectralField, bool)> {
    require_vector(u)?;
    require_vector(v)?;
    if u.grid() != v.grid() {
        return Err(Error::Mismatch("operands live on different grids".into()));
    }
    let grid = *u.grid();
    let n = grid.n;
    let p = grid.points();
    let mut ut = u.clone();
    let mut vt = v.clone();
    let flag = truncate(&mut ut) | truncate(&mut vt);
    let up = ut.to_physical()?;
    let vp = if std::ptr::eq(u, v) { up.clone() } else { vt.to_physical()? };
    let mut out = SpectralField::zeros(grid, n, Domain::Spectral);
    let xis: Vec<[f64; 3]> = (0..p).map(|i| grid.xi(&grid.wavevector(i))).collect();
    for i in 0..n {
        for j in 0..n {
            let prod: Vec<Complex64> = up
                .component(j)
                .iter()
                .zip(vp.component(i))
                .map(|(a, b)| Complex64::new(a.re * b.re, 0.0))
                .collect();
            let hat = SpectralField::from_data(grid, 1, Domain::Physical, prod)?.to_spectral()?;
            let dst = out.component_mut(i);
            for (idx, (d, h)) in dst.iter_mut().zip(hat.data()).enumerate() {
                *d += Complex64::new(0.0, xis[idx][j]) * h;
            }
        }
    }
    truncate(&mut out);
    Ok((leray(&out)?, flag))
}

/// `P∇·(u⊗u)`.
pub fn nonlinear(u: &SpectralField) -> Result<SpectralField> {
    Ok(tensor_divergence(u, u)?.0)
}

/// Trajectory `t ↦ e^{tΔ}u0` on a log-spaced grid.
pub fn heat_trajectory(u0: &SpectralField, times: &TimeGrid) -> Result<Trajectory> {
    require_vector(u0)?;
    let snapshots = times
        .nodes()
        .par_iter()
        .map(|&t| heat(u0, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        grid: *u0.grid(),
        times: times.nodes().to_vec(),
        timegrid: Some(times.clone()),
        snapshots,
        provenance: Provenance::HeatOnly,
    })
}

/// `∫_0^Δ e^{-λr} r^k dr` for `k = 0, 1, 2`.
fn heat_moments(lambda: f64, delta: f64) -> [f64; 3] {
    let x = lambda * delta;
    if x < 2.0 {
        let mut m = [0.0; 3];
        let mut term = 1.0;
        for n in 0..60 {
            if n > 0 {
                term *= -x / n as f64;
            }
            for (k, slot) in m.iter_mut().enumerate() {
                *slot += term / (n + k + 1) as f64;
            }
            if term.abs() < 1e-18 {
                break;
            }
        }
        [m[0] * delta, m[1] * delta * delta, m[2] * delta.powi(3)]
    } else {
        let e = (-x).exp();
        [
            delta * (1.0 - e) / x,
            delta * delta * (1.0 - e * (1.0 + x)) / (x * x),
            delta.powi(3) * (2.0 - e * (2.0 + 2.0 * x + x * x)) / x.powi(3),
        ]
    }
}

/// Weights `W_m = ∫_a^b e^{-λ(b-τ)} ℓ_m(τ) dτ` for the Lagrange basis on `nodes` (ending at `b`).
fn panel_weights(lambda: f64, a: f64, b: f64, nodes: &[f64]) -> Vec<f64> {
    let m = heat_moments(lambda, b - a);
    let d: Vec<f64> = nodes.iter().map(|t| b - t).collect();
    match nodes.len() {
        1 => vec![m[0]],
        2 => vec![
            (d[1] * m[0] - m[1]) / (d[1] - d[0]),
            (d[0] * m[0] - m[1]) / (d[0] - d[1]),
        ],
        3 => (0..3)
            .map(|i| {
                let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                (d[j] * d[k] * m[0] - (d[j] + d[k]) * m[1] + m[2]) / ((d[j] - d[i]) * (d[k] - d[i]))
            })
            .collect(),
        _ => unreachable!("panels use at most three nodes"),
    }
}

/// `B(U,V)(t_i)` for every node, with `B(u,v) = ∫_0^t e^{(t-τ)Δ} N(u,v)(τ) dτ`.
///
/// Each panel `[t_{i-1}, t_i]` integrates the heat factor exactly against the quadratic
/// through the forcing at `t_{i-2}, t_{i-1}, t_i` (linear on the second panel); the
/// forcing is held constant on `[0, t_0]`.
pub fn duhamel_all(u: &Trajectory, v: &Trajectory) -> Result<(Vec<SpectralField>, bool)> {
    if u.grid != v.grid || u.times != v.times {
        return Err(Error::Mismatch("trajectories differ in grid or times".into()));
    }
    let grid = u.grid;
    let p = grid.points();
    let n = grid.n;
    let forcing: Vec<(SpectralField, bool)> = u
        .snapshots
        .iter()
        .zip(&v.snapshots)
        .map(|(a, b)| tensor_divergence(a, b).map(|(f, flag)| (f.scaled(-1.0), flag)))
        .collect::<Result<Vec<_>>>()?;
    let flag = forcing.iter().any(|f| f.1);
    let xi2 = xi2_table(&grid);
    let times = &u.times;
    let mut out: Vec<SpectralField> = Vec::with_capacity(times.len());
    let mut prev = SpectralField::zeros(grid, n, Domain::Spectral);
    let mut t_prev = 0.0;
    for i in 0..times.len() {
        let t = times[i];
        let stencil: Vec<usize> = match i {
            0 => vec![0],
            1 => vec![0, 1],
            _ => vec![i - 2, i - 1, i],
        };
        let nodes: Vec<f64> = stencil.iter().map(|&s| times[s]).collect();
        let mut next = SpectralField::zeros(grid, n, Domain::Spectral);
        {
            let src = prev.data();
            let dst = next.data_mut();
            dst.par_chunks_mut(p).enumerate().for_each(|(c, chunk)| {
                for (idx, slot) in chunk.iter_mut().enumerate() {
                    let lambda = xi2[idx];
                    let w = panel_weights(lambda, t_prev, t, &nodes);
                    let mut acc = src[c * p + idx] * (-lambda * (t - t_prev)).exp();
                    for (wm, &s) in w.iter().zip(&stencil) {
                        acc += forcing[s].0.data()[c * p + idx] * *wm;
                    }
                    *slot = acc;
                }
            });
        }
        out.push(next.clone());
        prev = next;
        t_prev = t;
    }
    Ok((out, flag))
}

/// `B(U,V)` at the node with index `index`.
pub fn duhamel_bilinear(u: &Trajectory, v: &Trajectory, index: usize) -> Result<SpectralField> {
    if index >= u.times.len() {
        return Err(Error::Invalid(format!("node index {index} out of range")));
    }
    let (mut all, _) = duhamel_all(u, v)?;
    all.truncate(index + 1);
    Ok(all.pop().unwrap())
}

/// `‖u‖_{𝒳_T}`: the path norm of `t ↦ ‖u(t)‖_∞`.
pub fn xnorm(u: &Trajectory, kp: &KatoParams) -> Result<f64> {
    k_norm(&u.sup_series()?, kp)
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveDiagnostics {
    pub increments: Vec<f64>,
    pub contraction_ratios: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub heat_xnorm: f64,
    pub dealias_warning: bool,
    pub reason: String,
}

/// Picard iteration `u^{(m+1)} = e^{tΔ}u0 + B(u^{(m)}, u^{(m)})` on a log grid up to `kp.horizon`.
///
/// Increments are measured in the path norm relative to the heat trajectory's norm.
pub fn picard_solve(
    u0: &SpectralField,
    times: &TimeGrid,
    kp: &KatoParams,
    tol: f64,
    maxiter: usize,
) -> Result<(Trajectory, SolveDiagnostics)> {
    require_vector(u0)?;
    if !(tol > 0.0) {
        return Err(Error::Invalid(format!("tolerance must be positive, got {tol}")));
    }
    if ((times.horizon() - kp.horizon) / kp.horizon).abs() > 1e-12 {
        return Err(Error::Mismatch("time grid horizon differs from the path-norm horizon".into()));
    }
    let heat_traj = heat_trajectory(u0, times)?;
    let heat_norm = xnorm(&heat_traj, kp)?;
    let mut current = heat_traj.clone();
    current.provenance = Provenance::Picard;
    let mut diag = SolveDiagnostics {
        increments: Vec::new(),
        contraction_ratios: Vec::new(),
        converged: false,
        iterations: 0,
        heat_xnorm: heat_norm,
        dealias_warning: false,
        reason: String::new(),
    };
    if heat_norm == 0.0 {
        diag.converged = true;
        diag.iterations = 1;
        diag.increments.push(0.0);
        diag.reason = "zero data".into();
        return Ok((current, diag));
    }
    for it in 1..=maxiter.max(1) {
        let (b, flag) = duhamel_all(&current, &current)?;
        diag.dealias_warning |= flag;
        let snapshots = heat_traj
            .snapshots
            .iter()
            .zip(&b)
            .map(|(h, bb)| h.add(bb))
            .collect::<Result<Vec<_>>>()?;
        let next = Trajectory { snapshots, ..current.clone() };
        let inc = k_norm(&increment_series(&next, &current)?, kp)? / heat_norm;
        if !inc.is_finite() {
            diag.reason = "non-finite increment".into();
            diag.iterations = it;
            return Ok((current, diag));
        }
        if let Some(&last) = diag.increments.last() {
            diag.contraction_ratios.push(if last > 0.0 { inc / last } else { 0.0 });
        }
        diag.increments.push(inc);
        diag.iterations = it;
        current = next;
        if inc <= tol {
            diag.converged = true;
            diag.reason = "increment below tolerance".into();
            return Ok((current, diag));
        }
        let k = diag.increments.len();
        if k >= 4 && (k - 3..k).all(|i| diag.increments[i] > diag.increments[i - 1]) {
            diag.reason = "increments grew over three consecutive iterations".into();
            return Ok((current, diag));
        }
    }
    diag.reason = "iteration limit reached".into();
    Ok((current, diag))
}

/// Sup series of `next - current` with samples at the rounding floor of the operands set to zero.
fn increment_series(next: &Trajectory, current: &Trajectory) -> Result<TimeSeries> {
    let mut diff = next.difference(current)?.sup_series()?;
    let a = next.sup_series()?;
    let b = current.sup_series()?;
    for ((d, x), y) in diff.values.iter_mut().zip(&a.values).zip(&b.values) {
        if *d <= 64.0 * f64::EPSILON * x.max(*y) {
            *d = 0.0;
        }
    }
    Ok(diff)
}

/// Integrating-factor classical RK4 for `û' = -|ξ|²û + N(u,u)` with exact heat factors.
pub fn rk4_reference(u0: &SpectralField, horizon: f64, dt: f64) -> Result<Trajectory> {
    require_vector(u0)?;
    if !(horizon > 0.0 && dt > 0.0) {
        return Err(Error::Invalid("horizon and step must be positive".into()));
    }
    let steps = (horizon / dt - 1e-9).ceil().max(1.0) as usize;
    let h = horizon / steps as f64;
    let grid = *u0.grid();
    let e_half = |f: &SpectralField| heat(f, 0.5 * h);
    let e_full = |f: &SpectralField| heat(f, h);
    let force = |f: &SpectralField| -> Result<SpectralField> { Ok(nonlinear(f)?.scaled(-1.0)) };
    let initial = u0.lp_norm(f64::INFINITY)?;
    let mut u = u0.clone();
    let mut times = vec![0.0];
    let mut snapshots = vec![u.clone()];
    for step in 1..=steps {
        let k1 = force(&u)?;
        let k2 = force(&e_half(&u.axpy(0.5 * h, &k1)?)?)?;
        let k3 = force(&e_half(&u)?.axpy(0.5 * h, &k2)?)?;
        let k4 = force(&e_full(&u)?.axpy(h, &e_half(&k3)?)?)?;
        let mid = e_half(&k2.add(&k3)?)?;
        u = e_full(&u)?
            .axpy(h / 6.0, &e_full(&k1)?)?
            .axpy(h / 3.0, &mid)?
            .axpy(h / 6.0, &k4)?;
        let sup = u.lp_norm(f64::INFINITY)?;
        if !sup.is_finite() || sup > 1e6 * initial.max(f64::MIN_POSITIVE) {
            return Err(Error::Numerical(format!(
                "blow-up at step {step} (t = {}): sup norm {sup:e}",
                step as f64 * h
            )));
        }
        times.push(step as f64 * h);
        snapshots.push(u.clone());
    }
    Ok(Trajectory { grid, times, timegrid: None, snapshots, provenance: Provenance::Rk4 })
}

#[derive(Clone, Debug, Serialize)]
pub struct BilinearXReport {
    pub sigma: f64,
    pub q: f64,
    pub guaranteed: bool,
    pub path_ratio: f64,
    pub besov_ratio: f64,
}

/// `‖B(U,V)‖_𝒳 / (‖U‖_𝒳‖V‖_𝒳)` and `sup_t ‖B(U,V)(t)‖_{B^{-1,σ}_{∞q}} / (‖U‖_𝒳‖V‖_𝒳)`.
pub fn bilinear_xnorm_report(u: &Trajectory, v: &Trajectory, kp: &KatoParams) -> Result<BilinearXReport> {
    let nu = xnorm(u, kp)?;
    let nv = xnorm(v, kp)?;
    let guaranteed = crate::path_norms::bilinear_region(kp.sigma, kp.q);
    if nu == 0.0 || nv == 0.0 {
        return Ok(BilinearXReport { sigma: kp.sigma, q: kp.q, guaranteed, path_ratio: 0.0, besov_ratio: 0.0 });
    }
    let (b, _) = duhamel_all(u, v)?;
    let traj = Trajectory { snapshots: b, ..u.clone() };
    let nb = xnorm(&traj, kp)?;
    let params = BesovParams::new(-1.0, kp.sigma, f64::INFINITY, kp.q)?;
    let sup_besov = traj
        .snapshots
        .par_iter()
        .map(|s| besov_norm(s, &params))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(BilinearXReport {
        sigma: kp.sigma,
        q: kp.q,
        guaranteed,
        path_ratio: nb / (nu * nv),
        besov_ratio: sup_besov / (nu * nv),
    })
}

/// `(sin x₁ cos x₂, -cos x₁ sin x₂)` extended by zero in 3D, scaled by `amp`.
pub fn taylor_green(grid: GridSpec, amp: f64) -> Result<SpectralField> {
    let n = grid.n;
    let phys = SpectralField::from_fn(grid, n, |x| {
        let mut v = vec![amp * x[0].sin() * x[1].cos(), -amp * x[0].cos() * x[1].sin()];
        if n == 3 {
            v.push(0.0);
        }
        v
    });
    phys.to_spectral()
}

/// Random divergence-free field with modes `0 < |k| <= kmax` and sup norm `amp`.
pub fn random_divergence_free(grid: GridSpec, kmax: f64, amp: f64, seed: u64) -> Result<SpectralField> {
    let raw = crate::core_field::random_field(grid, grid.n, kmax, 1.0, seed);
    let proj = leray(&raw)?;
    let sup = proj.lp_norm(f64::INFINITY)?;
    Ok(proj.scaled(amp / sup))
}
