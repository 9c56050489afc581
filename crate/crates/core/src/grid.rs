//! Dense row-major 2D arrays and the image/response types built on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::FilterSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy> Grid<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Grid {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "{} values cannot fill a {rows}x{cols} grid",
                data.len()
            )));
        }
        Ok(Grid { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Grid { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    /// Signed lookup; `None` outside the grid.
    #[inline]
    pub fn get_signed(&self, r: isize, c: isize) -> Option<T> {
        if r < 0 || c < 0 || r as usize >= self.rows || c as usize >= self.cols {
            None
        } else {
            Some(self.data[r as usize * self.cols + c as usize])
        }
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: T) {
        self.data[r * self.cols + c] = value;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn map<U: Copy>(&self, f: impl FnMut(T) -> U) -> Grid<U> {
        Grid {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().copied().map(f).collect(),
        }
    }

    /// Rotation by 180 degrees.
    pub fn rotate_180(&self) -> Self {
        let mut data = self.data.clone();
        data.reverse();
        Grid {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Quarter turn: the pixel at `(x, y)` moves to `(y, cols - 1 - x)`.
    pub fn rotate_90(&self) -> Self {
        let (rows, cols) = (self.cols, self.rows);
        Grid::from_fn(rows, cols, |r, c| self.get(c, self.cols - 1 - r))
    }

    pub(crate) fn ensure_same_shape<U>(&self, other: &Grid<U>) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::ShapeMismatch {
                left: self.shape(),
                right: (other.rows, other.cols),
            });
        }
        Ok(())
    }
}

impl Grid<f64> {
    /// Bilinear sample at column `x`, row `y`; `None` outside `[0, cols-1] x [0, rows-1]`.
    pub fn bilinear(&self, x: f64, y: f64) -> Option<f64> {
        let max_x = (self.cols - 1) as f64;
        let max_y = (self.rows - 1) as f64;
        if !(x >= 0.0 && y >= 0.0 && x <= max_x && y <= max_y) {
            return None;
        }
        let x0 = (x.floor() as usize).min(self.cols.saturating_sub(2));
        let y0 = (y.floor() as usize).min(self.rows.saturating_sub(2));
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let x1 = (x0 + 1).min(self.cols - 1);
        let y1 = (y0 + 1).min(self.rows - 1);
        let top = self.get(y0, x0) * (1.0 - fx) + self.get(y0, x1) * fx;
        let bottom = self.get(y1, x0) * (1.0 - fx) + self.get(y1, x1) * fx;
        Some(top * (1.0 - fy) + bottom * fy)
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Grayscale image with intensities clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Image {
    pixels: Grid<f64>,
}

impl Image {
    pub fn new(pixels: Grid<f64>) -> Result<Self> {
        if pixels.rows() == 0 || pixels.cols() == 0 {
            return Err(Error::invalid("image must be at least 1x1"));
        }
        let pixels = pixels.map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) });
        Ok(Image { pixels })
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Image::new(Grid::filled(rows, cols, 0.0))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Image::new(Grid::from_fn(rows, cols, f))
    }

    pub fn height(&self) -> usize {
        self.pixels.rows()
    }

    pub fn width(&self) -> usize {
        self.pixels.cols()
    }

    pub fn pixels(&self) -> &Grid<f64> {
        &self.pixels
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.pixels.get(r, c)
    }

    /// Foreground mask (`value >= 0.5`).
    pub fn to_mask(&self) -> Grid<bool> {
        self.pixels.map(|v| v >= 0.5)
    }

    pub fn from_mask(mask: &Grid<bool>) -> Result<Self> {
        Image::new(mask.map(|b| if b { 1.0 } else { 0.0 }))
    }
}

/// Same-size response of an image to a filter (or a bank).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseMap {
    pub values: Grid<f64>,
    pub source: Option<FilterSpec>,
}

impl ResponseMap {
    pub fn new(values: Grid<f64>) -> Self {
        ResponseMap {
            values,
            source: None,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.shape()
    }
}

/// Per-pixel index of the winning bank filter.
pub type OrientationMap = Grid<usize>;
