//! Binary PGM (`P5`). Writes are always 8-bit, maxval 255; reads accept
//! header comments and 16-bit big-endian samples.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, Image};

pub fn encode(pixels: &Grid<u8>) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", pixels.cols(), pixels.rows()).into_bytes();
    out.extend_from_slice(pixels.as_slice());
    out
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Header<'a> {
    fn skip_space_and_comments(&mut self) {
        loop {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                return;
            }
        }
    }

    fn number(&mut self) -> Result<u32> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format("PGM", "expected a header number"))
    }
}

/// Returns samples (widened to `u16`) and the maxval.
pub fn decode(bytes: &[u8]) -> Result<(Grid<u16>, u16)> {
    if !bytes.starts_with(b"P5") {
        return Err(Error::format("PGM", "missing P5 magic"));
    }
    let mut h = Header { bytes, pos: 2 };
    let width = h.number()? as usize;
    let height = h.number()? as usize;
    let maxval = h.number()?;
    if width == 0 || height == 0 {
        return Err(Error::format("PGM", "zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format("PGM", format!("maxval {maxval} out of range")));
    }
    // exactly one whitespace byte separates the header from the raster
    if h.pos >= bytes.len() || !bytes[h.pos].is_ascii_whitespace() {
        return Err(Error::format("PGM", "header not terminated"));
    }
    let raster = &bytes[h.pos + 1..];
    let wide = maxval > 255;
    let need = width * height * if wide { 2 } else { 1 };
    if raster.len() < need {
        return Err(Error::format(
            "PGM",
            format!("raster needs {need} bytes, found {}", raster.len()),
        ));
    }
    let data = if wide {
        raster[..need]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    } else {
        raster[..need].iter().map(|&b| b as u16).collect()
    };
    Ok((Grid::from_vec(height, width, data)?, maxval as u16))
}

/// Decodes an 8-bit PGM without rescaling.
pub fn decode_u8(bytes: &[u8]) -> Result<Grid<u8>> {
    let (g, maxval) = decode(bytes)?;
    if maxval > 255 {
        return Err(Error::format("PGM", "expected 8-bit samples"));
    }
    Ok(g.map(|v| v as u8))
}

pub fn write_file(path: &Path, pixels: &Grid<u8>) -> Result<()> {
    std::fs::write(path, encode(pixels)).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<Grid<u8>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_u8(&bytes)
}

/// Foreground 255, background 0 (threshold 0.5).
pub fn mask_to_bytes(mask: &Grid<bool>) -> Grid<u8> {
    mask.map(|b| if b { 255 } else { 0 })
}

pub fn bytes_to_mask(gray: &Grid<u8>) -> Grid<bool> {
    gray.map(|v| v >= 128)
}

pub fn write_mask(path: &Path, mask: &Grid<bool>) -> Result<()> {
    write_file(path, &mask_to_bytes(mask))
}

pub fn read_mask(path: &Path) -> Result<Grid<bool>> {
    Ok(bytes_to_mask(&read_file(path)?))
}

pub fn write_image(path: &Path, img: &Image) -> Result<()> {
    write_file(path, &img.pixels().map(|v| (v * 255.0).round() as u8))
}

/// Reads any P5 file as an image scaled by its maxval.
pub fn read_image(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (g, maxval) = decode(&bytes)?;
    let scale = maxval as f64;
    Image::new(g.map(|v| v as f64 / scale))
}
