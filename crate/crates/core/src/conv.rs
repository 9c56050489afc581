//! Same-size 2D correlation with zero padding, evaluated directly or through
//! FFTs, and max-over-bank aggregation.
//!
//! Both paths compute `out(p) = sum taps(u, v) * img(p + (u, v))` with offsets
//! measured from the filter anchor. Filters are half-turn symmetric, so this
//! is also their convolution.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::filter::OrientedFilter;
use crate::grid::{Grid, Image, OrientationMap, ResponseMap};

/// Kernels with at most this many taps are correlated directly by [`correlate`].
pub const DIRECT_TAP_LIMIT: usize = 121;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Direct,
    Fft,
    /// Direct for small kernels, FFT otherwise.
    Auto,
}

fn check_fits(img: &Grid<f64>, taps: &Grid<f64>) -> Result<()> {
    if taps.rows() > 4 * img.rows() || taps.cols() > 4 * img.cols() {
        return Err(Error::FilterTooLarge {
            filter_rows: taps.rows(),
            filter_cols: taps.cols(),
            rows: img.rows(),
            cols: img.cols(),
        });
    }
    Ok(())
}

pub(crate) fn correlate_grid_direct(img: &Grid<f64>, taps: &Grid<f64>) -> Result<Grid<f64>> {
    check_fits(img, taps)?;
    let (h, w) = img.shape();
    let (kh, kw) = taps.shape();
    let (cy, cx) = ((kh / 2) as isize, (kw / 2) as isize);
    let mut out = Grid::filled(h, w, 0.0);
    for y in 0..h as isize {
        // tap rows whose image row y + r - cy is inside the image
        let r_lo = (cy - y).max(0) as usize;
        let r_hi = ((h as isize - y + cy).min(kh as isize)).max(0) as usize;
        for x in 0..w as isize {
            let c_lo = (cx - x).max(0) as usize;
            let c_hi = ((w as isize - x + cx).min(kw as isize)).max(0) as usize;
            let mut acc = 0.0;
            for r in r_lo..r_hi {
                let iy = (y + r as isize - cy) as usize;
                let img_row = img.row(iy);
                let tap_row = taps.row(r);
                for c in c_lo..c_hi {
                    let ix = (x + c as isize - cx) as usize;
                    acc += tap_row[c] * img_row[ix];
                }
            }
            out.set(y as usize, x as usize, acc);
        }
    }
    Ok(out)
}

/// Smallest `m >= n` whose only prime factors are 2, 3 and 5.
pub fn next_smooth(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut k = m;
        for p in [2, 3, 5] {
            while k % p == 0 {
                k /= p;
            }
        }
        if k == 1 {
            return m;
        }
        m += 1;
    }
}

struct Plan2d {
    rows: usize,
    cols: usize,
    row_fft: std::sync::Arc<dyn Fft<f64>>,
    col_fft: std::sync::Arc<dyn Fft<f64>>,
}

impl Plan2d {
    fn new(planner: &mut FftPlanner<f64>, rows: usize, cols: usize, inverse: bool) -> Self {
        let (row_fft, col_fft) = if inverse {
            (planner.plan_fft_inverse(cols), planner.plan_fft_inverse(rows))
        } else {
            (planner.plan_fft_forward(cols), planner.plan_fft_forward(rows))
        };
        Plan2d {
            rows,
            cols,
            row_fft,
            col_fft,
        }
    }

    fn run(&self, data: &mut [Complex<f64>]) {
        for row in data.chunks_exact_mut(self.cols) {
            self.row_fft.process(row);
        }
        let mut column = vec![Complex::new(0.0, 0.0); self.rows];
        for c in 0..self.cols {
            for r in 0..self.rows {
                column[r] = data[r * self.cols + c];
            }
            self.col_fft.process(&mut column);
            for r in 0..self.rows {
                data[r * self.cols + c] = column[r];
            }
        }
    }
}

pub(crate) fn correlate_grid_fft(img: &Grid<f64>, taps: &Grid<f64>) -> Result<Grid<f64>> {
    check_fits(img, taps)?;
    let (h, w) = img.shape();
    let (kh, kw) = taps.shape();
    let (cy, cx) = (kh / 2, kw / 2);
    let ph = next_smooth(h + kh - 1);
    let pw = next_smooth(w + kw - 1);

    let zero = Complex::new(0.0, 0.0);
    let mut a = vec![zero; ph * pw];
    for y in 0..h {
        for (x, &v) in img.row(y).iter().enumerate() {
            a[y * pw + x] = Complex::new(v, 0.0);
        }
    }
    // linear convolution with the flipped kernel is the correlation
    let mut b = vec![zero; ph * pw];
    for r in 0..kh {
        for c in 0..kw {
            b[(kh - 1 - r) * pw + (kw - 1 - c)] = Complex::new(taps.get(r, c), 0.0);
        }
    }

    let mut planner = FftPlanner::new();
    let forward = Plan2d::new(&mut planner, ph, pw, false);
    let inverse = Plan2d::new(&mut planner, ph, pw, true);
    forward.run(&mut a);
    forward.run(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= *y;
    }
    inverse.run(&mut a);

    let scale = 1.0 / (ph * pw) as f64;
    Ok(Grid::from_fn(h, w, |y, x| a[(y + cy) * pw + (x + cx)].re * scale))
}

pub(crate) fn correlate_grid(img: &Grid<f64>, taps: &Grid<f64>, method: Method) -> Result<Grid<f64>> {
    match method {
        Method::Direct => correlate_grid_direct(img, taps),
        Method::Fft => correlate_grid_fft(img, taps),
        Method::Auto => {
            if taps.rows() * taps.cols() <= DIRECT_TAP_LIMIT {
                correlate_grid_direct(img, taps)
            } else {
                correlate_grid_fft(img, taps)
            }
        }
    }
}

pub fn correlate_direct(img: &Image, f: &OrientedFilter) -> Result<ResponseMap> {
    correlate_with(img, f, Method::Direct)
}

pub fn correlate_fft(img: &Image, f: &OrientedFilter) -> Result<ResponseMap> {
    correlate_with(img, f, Method::Fft)
}

pub fn correlate(img: &Image, f: &OrientedFilter) -> Result<ResponseMap> {
    correlate_with(img, f, Method::Auto)
}

pub fn correlate_with(img: &Image, f: &OrientedFilter, method: Method) -> Result<ResponseMap> {
    Ok(ResponseMap {
        values: correlate_grid(img.pixels(), f.taps(), method)?,
        source: Some(*f.spec()),
    })
}

/// Per-pixel maximum response over `bank` and the index of the winning
/// filter; ties go to the lowest index.
///
/// Filters are evaluated in parallel; the reduction runs in bank order so the
/// result does not depend on scheduling.
pub fn bank_response(img: &Image, bank: &[OrientedFilter]) -> Result<(ResponseMap, OrientationMap)> {
    if bank.is_empty() {
        return Err(Error::EmptyBank);
    }
    let responses = bank
        .par_iter()
        .map(|f| correlate_grid(img.pixels(), f.taps(), Method::Auto))
        .collect::<Result<Vec<_>>>()?;

    let mut best = responses[0].clone();
    let mut index = Grid::filled(best.rows(), best.cols(), 0usize);
    for (k, resp) in responses.iter().enumerate().skip(1) {
        for ((b, i), &v) in best
            .as_mut_slice()
            .iter_mut()
            .zip(index.as_mut_slice())
            .zip(resp.as_slice())
        {
            if v > *b {
                *b = v;
                *i = k;
            }
        }
    }
    let source = if bank.len() == 1 { Some(*bank[0].spec()) } else { None };
    Ok((ResponseMap { values: best, source }, index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{make_filter, Envelope, FilterSpec};

    fn delta_filter() -> OrientedFilter {
        let spec = FilterSpec::new(1.0, 1, 0.0, 1.0, Envelope::Boxcar).unwrap();
        OrientedFilter::from_parts(spec, Grid::from_vec(1, 1, vec![1.0]).unwrap()).unwrap()
    }

    fn custom_filter(taps: Grid<f64>) -> OrientedFilter {
        let spec = FilterSpec::new(taps.rows() as f64, 1, 0.0, taps.cols() as f64, Envelope::Boxcar).unwrap();
        OrientedFilter::from_parts(spec, taps).unwrap()
    }

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (*seed >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Textbook zero-padded correlation, independent of the production loops.
    fn naive(img: &Grid<f64>, taps: &Grid<f64>) -> Grid<f64> {
        let (cy, cx) = ((taps.rows() / 2) as isize, (taps.cols() / 2) as isize);
        Grid::from_fn(img.rows(), img.cols(), |y, x| {
            let mut acc = 0.0;
            for r in 0..taps.rows() {
                for c in 0..taps.cols() {
                    let iy = y as isize + r as isize - cy;
                    let ix = x as isize + c as isize - cx;
                    acc += taps.get(r, c) * img.get_signed(iy, ix).unwrap_or(0.0);
                }
            }
            acc
        })
    }

    #[test]
    fn delta_kernel_is_identity() {
        let mut s = 7;
        let img = Image::from_fn(9, 13, |_, _| lcg(&mut s)).unwrap();
        let f = delta_filter();
        assert_eq!(correlate_direct(&img, &f).unwrap().values, *img.pixels());
        let fft = correlate_fft(&img, &f).unwrap().values;
        for (a, b) in fft.as_slice().iter().zip(img.pixels().as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_image_gives_zero_response() {
        let img = Image::zeros(12, 12).unwrap();
        let f = make_filter(&FilterSpec::new(9.0, 3, 0.7, 7.0, Envelope::Boxcar).unwrap()).unwrap();
        assert!(correlate_direct(&img, &f).unwrap().values.as_slice().iter().all(|&v| v == 0.0));
        assert!(correlate_fft(&img, &f).unwrap().values.as_slice().iter().all(|&v| v.abs() < 1e-15));
    }

    #[test]
    fn direct_matches_naive_oracle() {
        let mut s = 11;
        let img = Image::from_fn(16, 16, |_, _| lcg(&mut s)).unwrap();
        let taps = Grid::from_fn(5, 5, |_, _| lcg(&mut s) * 2.0 - 1.0);
        let got = correlate_direct(&img, &custom_filter(taps.clone())).unwrap().values;
        let want = naive(img.pixels(), &taps);
        for (a, b) in got.as_slice().iter().zip(want.as_slice()) {
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn fft_matches_direct_including_oversized_filters() {
        let mut s = 3;
        for &(h, w, kh, kw) in &[(16, 16, 5, 5), (64, 64, 15, 15), (7, 5, 15, 11), (3, 3, 9, 9), (1, 8, 3, 1)] {
            let img = Image::from_fn(h, w, |_, _| lcg(&mut s)).unwrap();
            let taps = Grid::from_fn(kh, kw, |_, _| lcg(&mut s) * 2.0 - 1.0);
            let f = custom_filter(taps);
            let d = correlate_direct(&img, &f).unwrap().values;
            let q = correlate_fft(&img, &f).unwrap().values;
            let scale = d.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, b) in d.as_slice().iter().zip(q.as_slice()) {
                assert!((a - b).abs() <= 1e-4 * scale, "{h}x{w} * {kh}x{kw}");
            }
        }
    }

    #[test]
    fn filter_too_large() {
        let img = Image::zeros(2, 2).unwrap();
        let f = custom_filter(Grid::filled(9, 1, 1.0));
        assert!(matches!(correlate_direct(&img, &f), Err(Error::FilterTooLarge { .. })));
        assert!(matches!(correlate_fft(&img, &f), Err(Error::FilterTooLarge { .. })));
        let ok = custom_filter(Grid::filled(7, 7, 1.0));
        assert!(correlate_fft(&img, &ok).is_ok());
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(next_smooth(1), 1);
        assert_eq!(next_smooth(7), 8);
        assert_eq!(next_smooth(11), 12);
        assert_eq!(next_smooth(77), 80);
        assert_eq!(next_smooth(97), 100);
        assert_eq!(next_smooth(121), 125);
    }

    #[test]
    fn bank_tie_break_and_single_filter() {
        let mut s = 5;
        let img = Image::from_fn(20, 20, |_, _| lcg(&mut s)).unwrap();
        let f = make_filter(&FilterSpec::new(9.0, 3, 0.0, 5.0, Envelope::Boxcar).unwrap()).unwrap();
        let (single, idx) = bank_response(&img, std::slice::from_ref(&f)).unwrap();
        assert_eq!(single.values, correlate(&img, &f).unwrap().values);
        assert!(idx.as_slice().iter().all(|&i| i == 0));

        let (_, idx) = bank_response(&img, &[f.clone(), f.clone()]).unwrap();
        assert!(idx.as_slice().iter().all(|&i| i == 0));

        assert!(matches!(bank_response(&img, &[]), Err(Error::EmptyBank)));
    }
}
