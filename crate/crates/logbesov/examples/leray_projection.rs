//! Leray projection removes gradients and is idempotent.

use logbesov::core_field::{random_field, GridSpec, SpectralField};
use num_complex::Complex64;
use logbesov::navier_stokes::{divergence_defect, leray};

fn main() -> logbesov::Result<()> {
    for n in [2, 3] {
        let grid = GridSpec::periodic(n, if n == 2 { 64 } else { 16 })?;
        let u = random_field(grid, n, 6.0, 1.0, 5);
        let p = leray(&u)?;
        let pp = leray(&p)?;
        let phi = random_field(grid, 1, 6.0, 1.0, 9);
        let parts = (0..n)
            .map(|c| phi.apply_multiplier(|xi| Complex64::new(0.0, xi[c])))
            .collect::<logbesov::Result<Vec<_>>>()?;
        let grad = SpectralField::stack(&parts)?;
        println!(
            "n = {n}: defect {:.2e} -> {:.2e}, idempotency {:.2e}, gradient residue {:.2e}",
            divergence_defect(&u),
            divergence_defect(&p),
            pp.sub(&p)?.max_abs() / p.max_abs(),
            leray(&grad)?.max_abs() / grad.max_abs()
        );
    }
    Ok(())
}
