//! Log-refined Besov norms of one field across (σ, q), with the critical σ_q for reference.

use logbesov::besov_norms::{besov_norm, sigma_q, BesovParams};
use logbesov::core_field::{random_field, GridSpec};

fn main() -> logbesov::Result<()> {
    let grid = GridSpec::periodic(2, 128)?;
    let u = random_field(grid, 1, 30.0, 1.0, 11);
    let qs = [1.0, 2.0, 4.0, f64::INFINITY];
    print!("{:>6}", "σ \\ q");
    for q in qs {
        print!("{q:>12}");
    }
    println!();
    for sigma in [0.0, 0.5, 0.75, 1.0, 2.0] {
        print!("{sigma:>6}");
        for q in qs {
            print!("{:>12.5}", besov_norm(&u, &BesovParams::new(-1.0, sigma, f64::INFINITY, q)?)?);
        }
        println!();
    }
    print!("{:>6}", "σ_q");
    for q in qs {
        print!("{:>12}", sigma_q(q)?);
    }
    println!();
    Ok(())
}
