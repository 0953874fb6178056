use std::fs;
use std::path::Path;

use faer::Mat;

use crate::error::{Error, Result};

pub const GSPM_MAGIC: &[u8; 4] = b"GSPM";

/// Magic, `u32` rows, `u32` cols, then row-major `f64` values, all little endian.
pub fn write_gspm(path: impl AsRef<Path>, m: &Mat<f64>) -> Result<()> {
    let path = path.as_ref();
    let rows = u32::try_from(m.nrows()).map_err(|_| Error::param("too many rows for GSPM"))?;
    let cols = u32::try_from(m.ncols()).map_err(|_| Error::param("too many columns for GSPM"))?;
    let mut buf = Vec::with_capacity(12 + 8 * m.nrows() * m.ncols());
    buf.extend_from_slice(GSPM_MAGIC);
    buf.extend_from_slice(&rows.to_le_bytes());
    buf.extend_from_slice(&cols.to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            buf.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_gspm(path: impl AsRef<Path>) -> Result<Mat<f64>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |detail: String| Error::Format {
        what: "GSPM",
        detail,
    };
    if bytes.len() < 12 || &bytes[..4] != GSPM_MAGIC {
        return Err(bad("missing GSPM header".into()));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(12))
        .ok_or_else(|| bad("dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(bad(format!(
            "{rows}x{cols} needs {expected} bytes, file has {}",
            bytes.len()
        )));
    }
    let body = &bytes[12..];
    Ok(Mat::from_fn(rows, cols, |i, j| {
        let k = 8 * (i * cols + j);
        f64::from_le_bytes(body[k..k + 8].try_into().unwrap())
    }))
}
