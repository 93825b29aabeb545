//! Bit-exact binary state files: magic "CMDN", u32 version, u64 N, f64 L,
//! f64 t, then the N Fourier coefficients as interleaved (re, im) f64 pairs
//! in storage order, all little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::SnapshotError;
use crate::grid::{Field, GridSpec};

const MAGIC: &[u8; 4] = b"CMDN";
const VERSION: u32 = 1;

/// Writes a timestamped field; the coefficient vector round-trips exactly.
pub fn write_snapshot(path: &Path, t: f64, field: &Field) -> Result<(), SnapshotError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(field.grid().size() as u64).to_le_bytes())?;
    w.write_all(&field.grid().half_length().to_le_bytes())?;
    w.write_all(&t.to_le_bytes())?;
    for c in field.coef() {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32, SnapshotError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read) -> Result<u64, SnapshotError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read) -> Result<f64, SnapshotError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

/// Reads a snapshot back as (t, field).
pub fn read_snapshot(path: &Path) -> Result<(f64, Field), SnapshotError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(SnapshotError::BadHeader(format!("magic {magic:?}")));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(SnapshotError::BadHeader(format!("unsupported version {version}")));
    }
    let n = read_u64(&mut r)? as usize;
    let half_length = read_f64(&mut r)?;
    let t = read_f64(&mut r)?;
    let grid = GridSpec::new(half_length, n)?;
    let mut coef = Vec::with_capacity(n);
    for _ in 0..n {
        let re = read_f64(&mut r)?;
        let im = read_f64(&mut r)?;
        coef.push(Complex64::new(re, im));
    }
    let mut tail = [0u8; 1];
    if r.read(&mut tail)? != 0 {
        return Err(SnapshotError::BadHeader("trailing bytes after payload".into()));
    }
    Ok((t, Field::from_coef(grid, coef)))
}
