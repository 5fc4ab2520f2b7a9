//! Taylor-Green vortex: the nonlinearity vanishes and the mild solution decays like e^{-2t}.

use logbesov::core_field::GridSpec;
use logbesov::navier_stokes::{nonlinear, picard_solve, taylor_green};
use logbesov::path_norms::{KatoParams, TimeGrid};

fn main() -> logbesov::Result<()> {
    let grid = GridSpec::periodic(2, 128)?;
    let u0 = taylor_green(grid, 1.0)?;
    println!("|N(TG)| = {:.2e}", nonlinear(&u0)?.max_abs());
    let horizon = 0.5;
    let times = TimeGrid::new(horizon)?;
    let (traj, diag) = picard_solve(&u0, &times, &KatoParams::new(1.0, f64::INFINITY, horizon)?, 1e-12, 20)?;
    let exact = u0.scaled((-2.0 * horizon).exp());
    println!(
        "iterations {}, relative error at T {:.2e}",
        diag.iterations,
        traj.last().sub(&exact)?.max_abs() / exact.max_abs()
    );
    Ok(())
}
