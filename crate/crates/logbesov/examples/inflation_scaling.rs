//! Scaling of the inflation functionals with the number of lacunary blocks on the desk preset.

use logbesov::inflation::{desk_family, scaling_experiment, Variant};

fn main() -> logbesov::Result<()> {
    let ms: Vec<usize> = (2..=6).collect();
    for (q, sigmas) in [(f64::INFINITY, vec![0.0, 0.5, 1.0, 1.25]), (4.0, vec![0.25, 0.5, 0.75, 1.0]), (2.0, vec![0.5])] {
        let family = desk_family(Variant::Main, &ms, 0.125, q)?;
        let report = scaling_experiment(&family, &sigmas)?;
        println!("q = {q}");
        for fit in &report.fits {
            println!(
                "  sigma {:5.2}: slope {:+.3} (predicted {:+.3}), residual {:.2e}",
                fit.sigma, fit.slope, fit.predicted, fit.residual
            );
        }
        for row in report.rows_for(sigmas[0]) {
            println!(
                "    m {}  |u0| {:.4e}  main {:.4e}  cross/main {:.3e}  pressure/main {:.3e}  full/main {:.4}",
                row.m,
                row.norm_u0,
                row.main,
                row.cross / row.main,
                row.pressure / row.main,
                row.full_solution_norm / row.main
            );
        }
        for d in &report.diagnostics {
            println!(
                "    m {}  audit margin {:.3}  alignment {:.12}  sup gap {:.1e}  surrogate [{:.3}, {:.3}]",
                d.m, d.audit_margin, d.alignment, d.sup_gap, d.surrogate_min, d.surrogate_max
            );
        }
    }
    Ok(())
}
