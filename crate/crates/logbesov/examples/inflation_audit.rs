//! Support audit of the desk preset, of literal exponents on a desk grid, and of touching index sets.

use logbesov::inflation::{geometric_audit, support_audit, InflationConfig, Variant};

fn show(label: &str, cfg: &InflationConfig, sign: bool) {
    let r = if sign { support_audit(cfg) } else { geometric_audit(cfg) };
    println!("{label}: pass {} (N = {})", r.pass, r.size);
    for c in &r.conditions {
        println!("  {:<20} {:<5} margin {:+.3e}  {}", c.name, c.pass, c.worst_margin, c.detail);
    }
}

fn main() -> logbesov::Result<()> {
    let desk = InflationConfig::desk(Variant::Main, 4, 0.125, 0.0, f64::INFINITY)?;
    show("desk preset, m = 4", &desk, true);
    let literal = InflationConfig { k_a: vec![20], k_b: vec![4, 8], size: Some(256), ..desk.clone() };
    show("literal exponents on N = 256", &literal, false);
    let touching = InflationConfig { k_a: vec![8], k_b: vec![8], bump_scale: 1.0, ..desk };
    show("touching index sets", &touching, false);
    Ok(())
}
