//! Picard mild solution against integrating-factor RK4 on small random data.

use logbesov::core_field::GridSpec;
use logbesov::navier_stokes::{picard_solve, random_divergence_free, rk4_reference};
use logbesov::path_norms::{KatoParams, TimeGrid};

fn main() -> logbesov::Result<()> {
    let grid = GridSpec::periodic(2, 64)?;
    let horizon = 0.1;
    let times = TimeGrid::new(horizon)?;
    let kp = KatoParams::new(1.0, 2.0, horizon)?;
    for seed in 0..4 {
        let u0 = random_divergence_free(grid, 8.0, 1.0, seed)?;
        let (traj, diag) = picard_solve(&u0, &times, &kp, 1e-12, 60)?;
        let rk = rk4_reference(&u0, horizon, 1e-3)?;
        let diff = traj.last().sub(rk.last())?.lp_norm(f64::INFINITY)?;
        let scale = rk.last().lp_norm(f64::INFINITY)?;
        println!(
            "seed {seed}: iterations {:2}  converged {}  relative sup discrepancy {:.3e}",
            diag.iterations,
            diag.converged,
            diff / scale
        );
    }
    Ok(())
}
