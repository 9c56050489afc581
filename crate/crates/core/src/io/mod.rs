//! File formats: binary PGM, the MLAR1 float array format, CSV number
//! formatting and PGM heatmaps.

pub mod mlar;
pub mod pgm;

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, ResponseMap};

/// Formats `v` in plain decimal notation with nine significant digits.
pub fn fmt_sig9(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v.is_nan() { "NaN".into() } else if v.is_infinite() { format!("{v}") } else { "0".into() };
    }
    // let the scientific formatter do the rounding, then re-place the point
    let sci = format!("{:.8e}", v.abs());
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let sign = if v < 0.0 { "-" } else { "" };
    let body = if exp < 0 {
        format!("0.{}{}", "0".repeat((-exp - 1) as usize), digits)
    } else if exp as usize >= digits.len() - 1 {
        format!("{}{}", digits, "0".repeat(exp as usize + 1 - digits.len()))
    } else {
        let split = exp as usize + 1;
        format!("{}.{}", &digits[..split], &digits[split..])
    };
    format!("{sign}{body}")
}

/// Min-max normalized 8-bit rendering of a float grid; a constant grid maps to 0.
pub fn heatmap_bytes(values: &Grid<f64>) -> Grid<u8> {
    let (lo, hi) = (values.min_value(), values.max_value());
    let range = hi - lo;
    values.map(|v| {
        if range > 0.0 && range.is_finite() {
            ((v - lo) / range * 255.0).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    })
}

pub fn write_heatmap(path: &Path, values: &Grid<f64>) -> Result<()> {
    pgm::write_file(path, &heatmap_bytes(values))
}

/// Reads a 2D map from MLAR1 or binary PGM, chosen by the file's magic bytes.
/// PGM samples are scaled to `[0, 1]`.
pub fn read_map(path: &Path) -> Result<ResponseMap> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_map_bytes(&bytes)
}

pub fn read_map_bytes(bytes: &[u8]) -> Result<ResponseMap> {
    if bytes.starts_with(mlar::MAGIC) {
        Ok(ResponseMap::new(mlar::decode(bytes)?))
    } else if bytes.starts_with(b"P5") {
        let (gray, maxval) = pgm::decode(bytes)?;
        let scale = maxval as f64;
        Ok(ResponseMap::new(gray.map(|v| v as f64 / scale)))
    } else {
        Err(Error::format("map", "unknown magic bytes (expected MLAR1 or P5)"))
    }
}
