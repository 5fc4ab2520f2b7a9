//! Ratio between the heat-semigroup characterization and the block definition of the norm.

use logbesov::besov_norms::{besov_norm, heat_char_norm, BesovParams, HeatCharParams};
use logbesov::core_field::{random_field, GridSpec};

fn main() -> logbesov::Result<()> {
    let grid = GridSpec::periodic(2, 64)?;
    let hc = HeatCharParams::new(1.0, 0.0)?;
    for (sigma, q) in [(1.0, f64::INFINITY), (0.5, 2.0)] {
        let params = BesovParams::new(-1.0, sigma, f64::INFINITY, q)?;
        let ratios = (0..10)
            .map(|seed| {
                let u = random_field(grid, 1, 20.0, 1.0, seed);
                Ok(heat_char_norm(&u, &params, &hc)? / besov_norm(&u, &params)?)
            })
            .collect::<logbesov::Result<Vec<f64>>>()?;
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        println!("σ = {sigma}, q = {q}: ratio in [{lo:.4}, {hi:.4}], spread {:.3}", hi / lo);
    }
    Ok(())
}
