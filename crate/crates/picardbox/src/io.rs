//! NSF1 field dumps: magic bytes `NSF1`, three little-endian u32 dims,
//! then little-endian f64 values, row-major with x fastest.

use crate::error::{Error, Result};
use crate::field::{Grid, ScalarField, VectorField};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"NSF1";

pub fn write_scalar(field: &ScalarField, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    let n = field.grid().points_per_axis() as u32;
    for dim in [n, n, n] {
        w.write_all(&dim.to_le_bytes())?;
    }
    let nu = n as usize;
    for z in 0..nu {
        for y in 0..nu {
            for x in 0..nu {
                w.write_all(&field.values()[[x, y, z]].to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// The file stores dims only; the box length is supplied by the caller.
pub fn read_scalar(path: &Path, box_length: f64) -> Result<ScalarField> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::BadFieldFile(format!(
            "bad magic {magic:?} in {}",
            path.display()
        )));
    }
    let mut dims = [0u32; 3];
    for d in dims.iter_mut() {
        let mut buf = [0u8; 4];
        r.read_exact(&mut buf)?;
        *d = u32::from_le_bytes(buf);
    }
    if dims[0] != dims[1] || dims[1] != dims[2] {
        return Err(Error::BadFieldFile(format!("non-cubic dims {dims:?}")));
    }
    let n = dims[0] as usize;
    let grid = Grid::new(n, box_length)?;
    let mut field = ScalarField::zeros(grid);
    let mut buf = [0u8; 8];
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                r.read_exact(&mut buf)?;
                field.values_mut()[[x, y, z]] = f64::from_le_bytes(buf);
            }
        }
    }
    Ok(field)
}

/// One NSF1 file per component, suffixed `_x`, `_y`, `_z`.
pub fn write_vector(field: &VectorField, dir: &Path, stem: &str) -> Result<()> {
    for (suffix, i) in [("x", 0), ("y", 1), ("z", 2)] {
        write_scalar(field.component(i), &dir.join(format!("{stem}_{suffix}.nsf1")))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{grid_2pi, random_band_limited_with, rng};

    #[test]
    fn roundtrip_preserves_values_exactly() {
        let grid = grid_2pi(8);
        let mut r = rng(9);
        let f = random_band_limited_with(grid, &mut r, 1.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.nsf1");
        write_scalar(&f, &path).unwrap();
        let back = read_scalar(&path, grid.box_length()).unwrap();
        assert_eq!(f.values(), back.values());
    }

    #[test]
    fn header_layout_is_fixed() {
        let grid = grid_2pi(8);
        let f = ScalarField::constant(grid, 1.5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.nsf1");
        write_scalar(&f, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[0..4], b"NSF1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 8);
        assert_eq!(bytes.len(), 4 + 12 + 8 * 8 * 8 * 8);
        assert_eq!(
            f64::from_le_bytes(bytes[16..24].try_into().unwrap()),
            1.5
        );
    }

    #[test]
    fn rejects_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.nsf1");
        std::fs::write(&path, b"XXXX____").unwrap();
        assert!(read_scalar(&path, 1.0).is_err());
    }
}
