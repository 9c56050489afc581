//! MLAR1: `MLAR1\n`, `<rows> <cols>\n`, then `rows * cols` little-endian
//! IEEE-754 binary32 values in row-major order, no padding.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;

pub const MAGIC: &[u8] = b"MLAR1\n";

/// Values are narrowed to `f32`.
pub fn encode(values: &Grid<f64>) -> Vec<u8> {
    let header = format!("{} {}\n", values.rows(), values.cols());
    let mut out = Vec::with_capacity(MAGIC.len() + header.len() + 4 * values.as_slice().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(header.as_bytes());
    for &v in values.as_slice() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Grid<f64>> {
    let rest = bytes
        .strip_prefix(MAGIC)
        .ok_or_else(|| Error::format("MLAR1", "missing magic"))?;
    let eol = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::format("MLAR1", "unterminated dimension line"))?;
    let dims = std::str::from_utf8(&rest[..eol]).map_err(|_| Error::format("MLAR1", "dimension line is not ascii"))?;
    let mut parts = dims.split(' ');
    let mut dim = || -> Result<usize> {
        parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| Error::format("MLAR1", format!("bad dimension line {dims:?}")))
    };
    let (rows, cols) = (dim()?, dim()?);
    if parts.next().is_some() {
        return Err(Error::format("MLAR1", format!("bad dimension line {dims:?}")));
    }
    let payload = &rest[eol + 1..];
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::format("MLAR1", "dimensions overflow"))?;
    if payload.len() != expected {
        return Err(Error::format(
            "MLAR1",
            format!("expected {expected} payload bytes, found {}", payload.len()),
        ));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Grid::from_vec(rows, cols, data)
}

pub fn write_file(path: &Path, values: &Grid<f64>) -> Result<()> {
    std::fs::write(path, encode(values)).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<Grid<f64>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}
