//! Duhamel bilinear ratio on heat trajectories, invariant under rescaling of the inputs.

use logbesov::core_field::GridSpec;
use logbesov::navier_stokes::{bilinear_xnorm_report, heat_trajectory, random_divergence_free};
use logbesov::path_norms::{KatoParams, TimeGrid};

fn main() -> logbesov::Result<()> {
    let grid = GridSpec::periodic(2, 32)?;
    let horizon = 0.1;
    let times = TimeGrid::log_spaced(horizon, 8, 1e-4)?;
    let kp = KatoParams::new(1.0, 2.0, horizon)?;
    for amp in [0.1, 1.0] {
        let u = heat_trajectory(&random_divergence_free(grid, 6.0, amp, 2)?, &times)?;
        let v = heat_trajectory(&random_divergence_free(grid, 6.0, 1.0, 3)?, &times)?;
        let r = bilinear_xnorm_report(&u, &v, &kp)?;
        println!("amplitude {amp}: path ratio {:.6}, Besov ratio {:.6}", r.path_ratio, r.besov_ratio);
    }
    Ok(())
}
