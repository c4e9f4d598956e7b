//! `SLW1` binary field format: little-endian header (magic, `u32 nx, ny`,
//! `f64 lx, ly, x_min, y_min`, `u8` representation) followed by row-major
//! interleaved `(re, im)` pairs.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::field::{ComplexField2D, Grid2D, Representation, C64};

pub const MAGIC: &[u8; 4] = b"SLW1";

pub fn write_field<W: Write>(mut w: W, field: &ComplexField2D) -> Result<()> {
    let g = field.grid();
    let mut head = Vec::with_capacity(45);
    head.extend_from_slice(MAGIC);
    head.extend_from_slice(&(g.nx() as u32).to_le_bytes());
    head.extend_from_slice(&(g.ny() as u32).to_le_bytes());
    for v in [g.lx(), g.ly(), g.x_min(), g.y_min()] {
        head.extend_from_slice(&v.to_le_bytes());
    }
    head.push(field.representation().tag());
    w.write_all(&head)?;
    let mut body = Vec::with_capacity(16 * g.len());
    for v in field.values() {
        body.extend_from_slice(&v.re.to_le_bytes());
        body.extend_from_slice(&v.im.to_le_bytes());
    }
    w.write_all(&body)?;
    Ok(())
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

pub fn read_field<R: Read>(mut r: R) -> Result<ComplexField2D> {
    if &take::<4, _>(&mut r)? != MAGIC {
        return Err(Error::Io("not an SLW1 stream".into()));
    }
    let nx = u32::from_le_bytes(take(&mut r)?) as usize;
    let ny = u32::from_le_bytes(take(&mut r)?) as usize;
    let mut f = [0.0; 4];
    for v in f.iter_mut() {
        *v = f64::from_le_bytes(take(&mut r)?);
    }
    let repr = Representation::from_tag(take::<1, _>(&mut r)?[0])
        .ok_or_else(|| Error::Io("unknown representation tag".into()))?;
    let grid = Grid2D::new(nx, ny, f[0], f[1], f[2], f[3])?;
    let mut raw = vec![0u8; 16 * grid.len()];
    r.read_exact(&mut raw)?;
    let values = raw
        .chunks_exact(16)
        .map(|c| {
            C64::new(
                f64::from_le_bytes(c[..8].try_into().expect("8 bytes")),
                f64::from_le_bytes(c[8..].try_into().expect("8 bytes")),
            )
        })
        .collect();
    ComplexField2D::new(grid, values, repr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let g = Grid2D::new(8, 16, 2.0, 3.0, -1.0, -1.5).unwrap();
        let f = ComplexField2D::from_fn(&g, |x, y| C64::new(x, y * y)).into_spectral();
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        assert_eq!(buf.len(), 4 + 8 + 32 + 1 + 16 * 128);
        assert_eq!(&buf[..4], b"SLW1");
        let back = read_field(buf.as_slice()).unwrap();
        assert_eq!(back.grid(), f.grid());
        assert_eq!(back.representation(), Representation::Spectral);
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn bad_magic() {
        assert!(matches!(read_field(&b"XXXX"[..]), Err(Error::Io(_))));
    }
}
