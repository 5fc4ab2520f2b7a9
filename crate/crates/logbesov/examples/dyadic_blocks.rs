//! Littlewood-Paley pieces of a random field: block norms and the partition-of-unity residual.

use logbesov::core_field::{random_field, GridSpec};
use logbesov::littlewood_paley::{decompose, partition_residual};

fn main() -> logbesov::Result<()> {
    let grid = GridSpec::periodic(2, 128)?;
    let jmax = grid.default_jmax();
    println!("N = {}, jmax = {jmax}, partition residual {:.2e}", grid.size, partition_residual(&grid, jmax));
    let u = random_field(grid, 1, 40.0, 1.0, 7);
    let pieces = decompose(&u, jmax)?;
    let mut sum = pieces[0].clone();
    for (j, piece) in pieces.iter().enumerate() {
        let label = if j == 0 { "S_0".to_string() } else { format!("Δ_{j}") };
        println!("{label:>4}: sup {:.4e}  L2 {:.4e}", piece.lp_norm(f64::INFINITY)?, piece.lp_norm(2.0)?);
        if j > 0 {
            sum = sum.add(piece)?;
        }
    }
    println!("reassembly error {:.2e}", sum.sub(&u)?.max_abs());
    Ok(())
}
