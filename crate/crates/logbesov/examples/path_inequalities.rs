//! Measured constants of the three path-norm inequalities on the builtin test family.

use logbesov::path_norms::{builtin_bilinear_family, builtin_family, inequality_check, Inequality, TimeGrid};

fn main() -> logbesov::Result<()> {
    let grid = TimeGrid::new(1.0)?;
    let family = builtin_family(&grid);
    for (kind, qs) in [(Inequality::Hardy, [2.0, 4.0, f64::INFINITY]), (Inequality::Damped, [1.0, 2.0, f64::INFINITY])] {
        for q in qs {
            let r = inequality_check(kind, &family, None, 0.0, q)?;
            println!(
                "{kind:?} q = {q}: measured C = {:.4} (reference {:?}), violations {}",
                r.measured_constant, r.reference_constant, r.violations
            );
        }
    }
    let pairs = builtin_bilinear_family(&grid);
    for (sigma, q) in [(1.0, 1.0), (1.0, f64::INFINITY), (0.5, 2.0), (0.75, 2.0)] {
        let r = inequality_check(Inequality::Bilinear, &[], Some(&pairs), sigma, q)?;
        println!(
            "Bilinear σ = {sigma}, q = {q}: measured C = {:.4}, guaranteed {}, divergent {}",
            r.measured_constant, r.guaranteed, r.divergent
        );
    }
    Ok(())
}
