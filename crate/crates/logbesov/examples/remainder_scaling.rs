//! The part of the solution beyond the second Picard iterate scales like δ³.

use logbesov::core_field::GridSpec;
use logbesov::inflation::{remainder_experiment, InflationConfig};

fn main() -> logbesov::Result<()> {
    let cfg = InflationConfig::dense_companion(0.25)?;
    let report = remainder_experiment(&cfg, GridSpec::periodic(3, 32)?, &[1e-3, 2e-3, 4e-3, 8e-3], 1e-13)?;
    for row in &report.rows {
        println!("δ = {:.0e}: remainder {:.4e} after {} iterations", row.delta, row.remainder, row.iterations);
    }
    println!("slope {:.4} (residual {:.1e})", report.slope, report.residual);
    Ok(())
}
