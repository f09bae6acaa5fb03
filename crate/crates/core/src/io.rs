//! Field snapshots: a self-describing little-endian binary layout and CSV
//! for one-dimensional fields.
//!
//! Layout: `b"FSFIELD\0"`, version `u32`, `n: u32`, `N: u32`, `L: f64`,
//! flavor `u8` (0 none, 1 massive, 2 massless-shifted), then `N^n`
//! row-major `(re, im)` pairs of `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::spectral::Flavor;

pub const MAGIC: &[u8; 8] = b"FSFIELD\0";
pub const VERSION: u32 = 1;

fn flavor_code(f: Option<Flavor>) -> u8 {
    match f {
        None => 0,
        Some(Flavor::Massive) => 1,
        Some(Flavor::MasslessShifted) => 2,
    }
}

pub fn write_field_to(mut w: impl Write, field: &Field, flavor: Option<Flavor>) -> Result<()> {
    let g = field.grid();
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(g.dim() as u32)?;
    w.write_u32::<LittleEndian>(g.samples() as u32)?;
    w.write_f64::<LittleEndian>(g.half_width())?;
    w.write_u8(flavor_code(flavor))?;
    for v in field.values() {
        w.write_f64::<LittleEndian>(v.re)?;
        w.write_f64::<LittleEndian>(v.im)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field_from(mut r: impl Read) -> Result<(Field, Option<Flavor>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a field file (bad magic)".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported field version {version}")));
    }
    let n = r.read_u32::<LittleEndian>()? as usize;
    let samples = r.read_u32::<LittleEndian>()? as usize;
    let half = r.read_f64::<LittleEndian>()?;
    let flavor = match r.read_u8()? {
        0 => None,
        1 => Some(Flavor::Massive),
        2 => Some(Flavor::MasslessShifted),
        c => return Err(Error::Format(format!("unknown flavor code {c}"))),
    };
    let grid = GridSpec::new(n, half, samples).map_err(|e| Error::Format(format!("bad grid header: {e}")))?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let re = r.read_f64::<LittleEndian>()?;
        let im = r.read_f64::<LittleEndian>()?;
        values.push(Complex64::new(re, im));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    Ok((Field::new(grid, values)?, flavor))
}

pub fn write_field(path: &Path, field: &Field, flavor: Option<Flavor>) -> Result<()> {
    write_field_to(BufWriter::new(File::create(path)?), field, flavor)
}

pub fn read_field(path: &Path) -> Result<(Field, Option<Flavor>)> {
    read_field_from(BufReader::new(File::open(path)?))
}

/// Columns `x, re, im`; one-dimensional fields only.
pub fn write_field_csv(path: &Path, field: &Field) -> Result<()> {
    let g = field.grid();
    if g.dim() != 1 {
        return Err(Error::InvalidArgument("CSV snapshots are for n = 1 fields".into()));
    }
    let mut w = csv::Writer::from_path(path).map_err(crate::kernels::csv_error)?;
    w.write_record(["x", "re", "im"]).map_err(crate::kernels::csv_error)?;
    for (i, v) in field.values().iter().enumerate() {
        w.write_record([g.coordinate(i).to_string(), v.re.to_string(), v.im.to_string()]).map_err(crate::kernels::csv_error)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        let grid = GridSpec::new(2, 3.0, 8).unwrap();
        let f = Field::from_fn(grid, |p| Complex64::new(p[0], p[1] * p[0] + 0.25));
        let mut buf = Vec::new();
        write_field_to(&mut buf, &f, Some(Flavor::MasslessShifted)).unwrap();
        assert_eq!(buf.len(), 8 + 4 + 4 + 4 + 8 + 1 + 64 * 16);
        let (g, flavor) = read_field_from(buf.as_slice()).unwrap();
        assert_eq!(flavor, Some(Flavor::MasslessShifted));
        assert_eq!(g.grid(), f.grid());
        assert_eq!(g.values(), f.values());
    }

    #[test]
    fn corrupt_headers_are_rejected() {
        let grid = GridSpec::new(1, 1.0, 8).unwrap();
        let mut buf = Vec::new();
        write_field_to(&mut buf, &Field::zeros(grid), None).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_field_from(bad.as_slice()), Err(Error::Format(_))));
        let mut long = buf.clone();
        long.push(0);
        assert!(matches!(read_field_from(long.as_slice()), Err(Error::Format(_))));
        assert!(read_field_from(&buf[..buf.len() - 3]).is_err());
    }

    #[test]
    fn csv_snapshot() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridSpec::new(1, 2.0, 8).unwrap();
        let f = Field::from_real_fn(grid, |p| p[0]);
        let path = dir.path().join("f.csv");
        write_field_csv(&path, &f).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert!(text.starts_with("x,re,im\n-2,-2,0"));
        assert!(write_field_csv(&path, &Field::zeros(GridSpec::new(2, 1.0, 8).unwrap())).is_err());
    }
}
