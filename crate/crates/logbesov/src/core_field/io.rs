//! LBF field files.
//!
//! Header: `LBF1`, then little-endian `u32` version, `u32` n, n × `u32` N, `u32` components,
//! `u32` domain (0 physical, 1 spectral), `f64` L. Physical payloads store one `f64` per
//! point in grid order; spectral payloads store `(re, im)` pairs in lexicographic
//! wavevector order with each axis running from `-N/2` to `N/2 - 1`.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use super::{Domain, GridSpec, SpectralField};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"LBF1";
pub const VERSION: u32 = 1;

/// Storage index for the i-th entry in file order.
fn file_to_storage(grid: &GridSpec, domain: Domain, i: usize) -> usize {
    if domain == Domain::Physical {
        return i;
    }
    let half = grid.size / 2;
    let mut rest = i;
    let mut out = 0usize;
    let mut mult = 1usize;
    for _ in 0..grid.n {
        let lex = rest % grid.size;
        rest /= grid.size;
        out += ((lex + half) % grid.size) * mult;
        mult *= grid.size;
    }
    out
}

pub fn encode(field: &SpectralField) -> Vec<u8> {
    let grid = field.grid();
    let p = grid.points();
    let mut buf = Vec::with_capacity(32 + field.data().len() * 16);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(grid.n as u32).to_le_bytes());
    for _ in 0..grid.n {
        buf.extend_from_slice(&(grid.size as u32).to_le_bytes());
    }
    buf.extend_from_slice(&(field.components() as u32).to_le_bytes());
    let tag: u32 = match field.domain() {
        Domain::Physical => 0,
        Domain::Spectral => 1,
    };
    buf.extend_from_slice(&tag.to_le_bytes());
    buf.extend_from_slice(&grid.length.to_le_bytes());
    for c in 0..field.components() {
        let comp = field.component(c);
        for i in 0..p {
            let v = comp[file_to_storage(grid, field.domain(), i)];
            buf.extend_from_slice(&v.re.to_le_bytes());
            if field.domain() == Domain::Spectral {
                buf.extend_from_slice(&v.im.to_le_bytes());
            }
        }
    }
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::ShortPayload);
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<SpectralField> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    let mut r = Reader { bytes, pos: 4 };
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Version(version));
    }
    let n = r.u32()? as usize;
    if n != 2 && n != 3 {
        return Err(Error::Dimension(n));
    }
    let mut sizes = Vec::with_capacity(n);
    for _ in 0..n {
        sizes.push(r.u32()? as usize);
    }
    if sizes.iter().any(|&s| s != sizes[0]) {
        return Err(Error::Invalid(format!("non-cubic grid {sizes:?}")));
    }
    let components = r.u32()? as usize;
    if components == 0 {
        return Err(Error::Invalid("zero components".into()));
    }
    let domain = match r.u32()? {
        0 => Domain::Physical,
        1 => Domain::Spectral,
        other => return Err(Error::Invalid(format!("unknown domain tag {other}"))),
    };
    let length = r.f64()?;
    let grid = GridSpec::new(n, sizes[0], length)?;
    let p = grid.points();
    let mut field = SpectralField::zeros(grid, components, domain);
    for c in 0..components {
        for i in 0..p {
            let re = r.f64()?;
            let im = if domain == Domain::Spectral { r.f64()? } else { 0.0 };
            let j = file_to_storage(&grid, domain, i);
            field.component_mut(c)[j] = Complex64::new(re, im);
        }
    }
    if r.pos != bytes.len() {
        return Err(Error::Invalid(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(field)
}

pub fn save(field: &SpectralField, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode(field))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<SpectralField> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core_field::random_field;

    #[test]
    fn round_trip_is_bit_exact() {
        let g = GridSpec::periodic(3, 8).unwrap();
        let f = random_field(g, 3, 3.0, 0.7, 11);
        assert_eq!(decode(&encode(&f)).unwrap(), f);
        let p = f.to_physical().unwrap();
        assert_eq!(decode(&encode(&p)).unwrap(), p);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.lbf");
        save(&f, &path).unwrap();
        assert_eq!(load(&path).unwrap(), f);
    }

    #[test]
    fn spectral_order_is_lexicographic() {
        let g = GridSpec::periodic(2, 8).unwrap();
        let mut f = SpectralField::zeros(g, 1, Domain::Spectral);
        let i = g.flat_index(&[-3, 2, 0]).unwrap();
        f.component_mut(0)[i] = Complex64::new(5.0, 0.0);
        let bytes = encode(&f);
        let header = 4 + 4 * 4 + 4 * 2 + 8;
        // (-3, 2) sits at row 1, column 6 in file order.
        let at = header + (8 + 6) * 16;
        assert_eq!(f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap()), 5.0);
    }

    #[test]
    fn distinct_errors() {
        let g = GridSpec::periodic(2, 8).unwrap();
        let bytes = encode(&random_field(g, 1, 2.0, 1.0, 3));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        let e = decode(&bad).unwrap_err();
        assert!(matches!(e, Error::BadMagic));
        assert_eq!(e.to_string(), "not a field file");
        let mut ver = bytes.clone();
        ver[4] = 2;
        assert!(matches!(decode(&ver), Err(Error::Version(2))));
        let e = decode(&bytes[..bytes.len() - 5]).unwrap_err();
        assert!(matches!(e, Error::ShortPayload));
        assert_eq!(e.to_string(), "short payload");
    }
}
