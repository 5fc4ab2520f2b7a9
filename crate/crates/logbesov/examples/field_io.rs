//! Field files round-trip bit for bit.

use logbesov::core_field::{io, random_field, GridSpec};

fn main() -> logbesov::Result<()> {
    let dir = std::env::temp_dir().join("logbesov-field-io");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("random.lbf");
    let u = random_field(GridSpec::periodic(3, 16)?, 3, 5.0, 1.0, 1);
    io::save(&u, &path)?;
    let v = io::load(&path)?;
    let same = u.data().iter().zip(v.data()).all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits());
    println!("{} bytes written, bit-exact round trip: {same}", std::fs::metadata(&path)?.len());
    Ok(())
}
