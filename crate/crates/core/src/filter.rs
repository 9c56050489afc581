//! Oriented 2D mode-locked filters.
//!
//! The 1D bank superposition is extruded along an axis: the tap at offset
//! `(u, v)` (column, row) from the anchor takes the profile value at the
//! cross-axis coordinate `s = -u sin(theta) + v cos(theta)`, shifted so that
//! the anchor sits on the pulse peak, and is weighted by an envelope over the
//! along-axis coordinate `t = u cos(theta) + v sin(theta)`.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::io::mlar;
use crate::wave::ModeLockedBank;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Envelope {
    #[default]
    Boxcar,
    Gaussian { sigma: f64 },
}

impl Envelope {
    fn weight(&self, t: f64) -> f64 {
        match *self {
            Envelope::Boxcar => 1.0,
            Envelope::Gaussian { sigma } => (-t * t / (2.0 * sigma * sigma)).exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSpec {
    /// Cross-axis extent in pixels (the bank span).
    pub span: f64,
    pub n: usize,
    /// Axis direction in radians, normalized to `[0, pi)`.
    pub orientation: f64,
    /// Along-axis extent in pixels.
    pub length: f64,
    #[serde(default)]
    pub envelope: Envelope,
}

impl FilterSpec {
    pub fn new(span: f64, n: usize, orientation: f64, length: f64, envelope: Envelope) -> Result<Self> {
        let spec = FilterSpec {
            span,
            n,
            orientation: normalize_orientation(orientation),
            length,
            envelope,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.span > 0.0 && self.span.is_finite()) {
            return Err(Error::invalid(format!("span must be > 0, got {}", self.span)));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::invalid(format!("length must be > 0, got {}", self.length)));
        }
        if self.n < 1 {
            return Err(Error::invalid("n must be >= 1"));
        }
        if !self.orientation.is_finite() {
            return Err(Error::invalid("orientation must be finite"));
        }
        if let Envelope::Gaussian { sigma } = self.envelope {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::invalid(format!("gaussian sigma must be > 0, got {sigma}")));
            }
        }
        Ok(())
    }
}

/// Maps any angle onto `[0, pi)`; a filter and its half-turn are the same filter.
pub fn normalize_orientation(theta: f64) -> f64 {
    let t = theta.rem_euclid(PI);
    if t >= PI {
        0.0
    } else {
        t
    }
}

/// Span whose shortest component wavelength `2L / (2n + 1)` equals `width`.
///
/// A filled bar of this width passes every component with positive gain, so
/// the filter response peaks on the bar's centre line. A bar as wide as the
/// span itself covers the whole zero-mean support and produces no response.
pub fn matched_span(width: f64, n: usize) -> f64 {
    (2 * n + 1) as f64 * width / 2.0
}

/// Inverse of [`matched_span`].
pub fn matched_width(span: f64, n: usize) -> f64 {
    2.0 * span / (2 * n + 1) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrientedFilter {
    spec: FilterSpec,
    taps: Grid<f64>,
}

impl OrientedFilter {
    /// Reassembles a filter from stored parts; the tap array must be odd x odd.
    pub fn from_parts(spec: FilterSpec, taps: Grid<f64>) -> Result<Self> {
        spec.validate()?;
        if taps.rows() % 2 == 0 || taps.cols() % 2 == 0 {
            return Err(Error::invalid(format!(
                "filter taps must be odd x odd, got {}x{}",
                taps.rows(),
                taps.cols()
            )));
        }
        Ok(OrientedFilter { spec, taps })
    }

    pub fn spec(&self) -> &FilterSpec {
        &self.spec
    }

    pub fn taps(&self) -> &Grid<f64> {
        &self.taps
    }

    /// `(row, col)` of the centre tap.
    pub fn anchor(&self) -> (usize, usize) {
        (self.taps.rows() / 2, self.taps.cols() / 2)
    }

    /// Writes the taps as MLAR1 to `path` and the spec as JSON to `<path>.json`.
    pub fn save(&self, path: &Path) -> Result<()> {
        mlar::write_file(path, &self.taps)?;
        let sidecar = sidecar_path(path);
        let json = serde_json::to_string_pretty(&self.spec)?;
        std::fs::write(&sidecar, json).map_err(|e| Error::io(&sidecar, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let taps = mlar::read_file(path)?;
        let sidecar = sidecar_path(path);
        let text = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        let spec: FilterSpec = serde_json::from_str(&text)?;
        OrientedFilter::from_parts(spec, taps)
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".json");
    os.into()
}

pub fn make_filter(spec: &FilterSpec) -> Result<OrientedFilter> {
    let spec = FilterSpec::new(spec.span, spec.n, spec.orientation, spec.length, spec.envelope)?;
    let bank = ModeLockedBank::new(spec.span, spec.n, 1.0)?;
    let (sin, cos) = spec.orientation.sin_cos();
    let half_span = spec.span / 2.0;
    let half_len = spec.length / 2.0;

    // bounding box of the rotated support rectangle
    const EPS: f64 = 1e-9;
    let hx = cos.abs() * half_len + sin.abs() * half_span;
    let hy = sin.abs() * half_len + cos.abs() * half_span;
    let rx = (hx + EPS).floor() as isize;
    let ry = (hy + EPS).floor() as isize;
    let cols = (2 * rx + 1) as usize;
    let rows = (2 * ry + 1) as usize;

    let mut support = Grid::filled(rows, cols, false);
    let mut taps = Grid::filled(rows, cols, 0.0);
    for r in 0..rows {
        let v = r as isize - ry;
        for c in 0..cols {
            let u = c as isize - rx;
            let (uf, vf) = (u as f64, v as f64);
            let s = -uf * sin + vf * cos;
            let t = uf * cos + vf * sin;
            if s.abs() <= half_span + EPS && t.abs() <= half_len + EPS {
                // |s| keeps the half-turn symmetry exact in floating point
                let value = spec.envelope.weight(t) * bank.superpose(half_span + s.abs());
                support.set(r, c, true);
                taps.set(r, c, value);
            }
        }
    }

    let count = support.as_slice().iter().filter(|&&b| b).count();
    if count == 0 || taps.as_slice().iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateFilter);
    }
    let mean = taps.as_slice().iter().sum::<f64>() / count as f64;
    for (tap, &inside) in taps.as_mut_slice().iter_mut().zip(support.as_slice()) {
        if inside {
            *tap -= mean;
        }
    }
    let norm = taps.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(Error::DegenerateFilter);
    }
    for tap in taps.as_mut_slice() {
        *tap /= norm;
    }
    Ok(OrientedFilter { spec, taps })
}

/// Span-major Cartesian product of `spans` x `orientations`.
pub fn make_filter_bank(
    spans: &[f64],
    orientations: &[f64],
    n: usize,
    length: f64,
    envelope: Envelope,
) -> Result<Vec<OrientedFilter>> {
    if spans.is_empty() {
        return Err(Error::invalid("filter bank needs at least one span"));
    }
    if orientations.is_empty() {
        return Err(Error::invalid("filter bank needs at least one orientation"));
    }
    let mut bank = Vec::with_capacity(spans.len() * orientations.len());
    for &span in spans {
        for &orientation in orientations {
            bank.push(make_filter(&FilterSpec::new(span, n, orientation, length, envelope)?)?);
        }
    }
    Ok(bank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;
    use std::f64::consts::FRAC_PI_4;

    fn boxcar(span: f64, n: usize, theta: f64, length: f64) -> OrientedFilter {
        make_filter(&FilterSpec::new(span, n, theta, length, Envelope::Boxcar).unwrap()).unwrap()
    }

    fn ncc(a: &[f64], b: &[f64]) -> f64 {
        let ma = a.iter().sum::<f64>() / a.len() as f64;
        let mb = b.iter().sum::<f64>() / b.len() as f64;
        let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
        for (x, y) in a.iter().zip(b) {
            ab += (x - ma) * (y - mb);
            aa += (x - ma) * (x - ma);
            bb += (y - mb) * (y - mb);
        }
        ab / (aa * bb).sqrt()
    }

    #[test]
    fn normalization_holds() {
        for &theta in &[0.0, 0.3, FRAC_PI_4, FRAC_PI_2, 2.5] {
            for env in [Envelope::Boxcar, Envelope::Gaussian { sigma: 4.0 }] {
                let f = make_filter(&FilterSpec::new(21.0, 4, theta, 15.0, env).unwrap()).unwrap();
                let taps = f.taps().as_slice();
                let sum: f64 = taps.iter().sum();
                let norm: f64 = taps.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!(sum.abs() <= 1e-6, "sum {sum}");
                assert!((norm - 1.0).abs() <= 1e-6, "norm {norm}");
                assert_eq!(f.taps().rows() % 2, 1);
                assert_eq!(f.taps().cols() % 2, 1);
            }
        }
    }

    #[test]
    fn half_turn_symmetry_is_exact() {
        for &theta in &[0.0, 0.2, FRAC_PI_4, 1.0, FRAC_PI_2, 2.9] {
            let f = make_filter(&FilterSpec::new(19.0, 5, theta, 11.0, Envelope::Gaussian { sigma: 3.0 }).unwrap())
                .unwrap();
            assert_eq!(f.taps().rotate_180(), *f.taps());
        }
    }

    #[test]
    fn orientation_wraps_at_pi() {
        let a = boxcar(21.0, 4, 0.0, 21.0);
        let b = boxcar(21.0, 4, PI, 21.0);
        assert_eq!(a.taps(), b.taps());
        assert_eq!(b.spec().orientation, 0.0);
        assert!((normalize_orientation(-FRAC_PI_4) - 3.0 * FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn horizontal_filter_has_positive_center_row_and_negative_flanks() {
        let f = boxcar(21.0, 4, 0.0, 21.0);
        let taps = f.taps();
        assert_eq!(taps.shape(), (21, 21));
        let (ar, ac) = f.anchor();
        // every tap of the central row is positive and maximal
        let center = taps.get(ar, ac);
        assert!(taps.row(ar).iter().all(|&v| v > 0.0 && (v - center).abs() < 1e-15));
        assert!(taps.as_slice().iter().all(|&v| v <= center + 1e-15));
        // sign pattern per row follows the 1D superposition shifted by its support mean
        let bank = ModeLockedBank::new(21.0, 4, 1.0).unwrap();
        let profile: Vec<f64> = (0..taps.rows())
            .map(|r| bank.superpose(10.5 + (r as f64 - ar as f64).abs()))
            .collect();
        let mean = profile.iter().sum::<f64>() / profile.len() as f64;
        let (mut above, mut below) = (0, 0);
        for (r, p) in profile.iter().enumerate() {
            let tap = taps.get(r, ac);
            assert_eq!(tap > 0.0, *p > mean, "row {r}");
            if tap < 0.0 {
                if r < ar {
                    above += 1;
                } else {
                    below += 1;
                }
            }
        }
        assert!(above > 0 && below > 0);
    }

    #[test]
    fn cross_section_tracks_wave_profile() {
        for &theta in &[0.0, FRAC_PI_4, FRAC_PI_2, 3.0 * FRAC_PI_4, 0.4] {
            let span = 31.0;
            let f = boxcar(span, 4, theta, 31.0);
            let bank = ModeLockedBank::new(span, 4, 1.0).unwrap();
            let (ar, ac) = f.anchor();
            let (sin, cos) = theta.sin_cos();
            let mut got = Vec::new();
            let mut want = Vec::new();
            for r in 0..f.taps().rows() {
                for c in 0..f.taps().cols() {
                    let (u, v) = (c as f64 - ac as f64, r as f64 - ar as f64);
                    let s = -u * sin + v * cos;
                    let t = u * cos + v * sin;
                    if t.abs() <= 0.5 && s.abs() <= span / 2.0 {
                        got.push(f.taps().get(r, c));
                        want.push(bank.superpose(span / 2.0 + s));
                    }
                }
            }
            assert!(got.len() >= 15);
            assert!(ncc(&got, &want) >= 0.999, "theta {theta}");
        }
    }

    #[test]
    fn bank_ordering_is_span_major() {
        let bank = make_filter_bank(&[11.0, 21.0], &[0.0, FRAC_PI_2], 4, 11.0, Envelope::Boxcar).unwrap();
        let order: Vec<(f64, f64)> = bank.iter().map(|f| (f.spec().span, f.spec().orientation)).collect();
        assert_eq!(order, vec![(11.0, 0.0), (11.0, FRAC_PI_2), (21.0, 0.0), (21.0, FRAC_PI_2)]);
        assert!(matches!(
            make_filter_bank(&[], &[0.0], 4, 11.0, Envelope::Boxcar),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            make_filter_bank(&[11.0], &[], 4, 11.0, Envelope::Boxcar),
            Err(Error::InvalidArgument(_))
        ));
    }

    /// Bilinear resample of `src` rotated by `angle` onto a grid of `shape`.
    fn rotate_bilinear(src: &Grid<f64>, angle: f64, shape: (usize, usize)) -> Grid<f64> {
        let (sr, sc) = ((src.rows() / 2) as f64, (src.cols() / 2) as f64);
        let (tr, tc) = ((shape.0 / 2) as f64, (shape.1 / 2) as f64);
        let (sin, cos) = angle.sin_cos();
        Grid::from_fn(shape.0, shape.1, |r, c| {
            let (x, y) = (c as f64 - tc, r as f64 - tr);
            // inverse rotation back into the source frame
            let xs = x * cos + y * sin;
            let ys = -x * sin + y * cos;
            src.bilinear(xs + sc, ys + sr).unwrap_or(0.0)
        })
    }

    fn rel_l2(a: &Grid<f64>, b: &Grid<f64>) -> f64 {
        let num: f64 = a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y) * (x - y)).sum();
        let den: f64 = b.as_slice().iter().map(|y| y * y).sum();
        (num / den).sqrt()
    }

    #[test]
    fn quarter_turn_related_filters_are_rotations() {
        let bank = make_filter_bank(&[15.0], &[0.0, FRAC_PI_4, FRAC_PI_2, 3.0 * FRAC_PI_4], 4, 15.0, Envelope::Boxcar)
            .unwrap();
        for (a, b) in [(0, 2), (1, 3)] {
            let target = bank[b].taps();
            let rotated = rotate_bilinear(bank[a].taps(), FRAC_PI_2, target.shape());
            assert!(rel_l2(&rotated, target) <= 0.05);
        }
    }

    #[test]
    fn diagonal_filter_matches_continuous_rotation() {
        // taps of the 45-degree filter equal the mean-shifted profile evaluated
        // at the exactly rotated coordinate of each tap centre
        let span = 15.0;
        let f = boxcar(span, 4, FRAC_PI_4, span);
        let bank = ModeLockedBank::new(span, 4, 1.0).unwrap();
        let (ar, ac) = f.anchor();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut got = Vec::new();
        let mut want = Vec::new();
        for r in 0..f.taps().rows() {
            for c in 0..f.taps().cols() {
                let (u, v) = (c as f64 - ac as f64, r as f64 - ar as f64);
                let (s, t) = ((v - u) * h, (u + v) * h);
                if s.abs() <= span / 2.0 && t.abs() <= span / 2.0 {
                    got.push(f.taps().get(r, c));
                    want.push(bank.superpose(span / 2.0 + s));
                }
            }
        }
        assert!(ncc(&got, &want) > 1.0 - 1e-9);
    }

    fn brute_correlation_row(img: &Grid<f64>, f: &OrientedFilter, row: usize) -> Vec<f64> {
        let (ar, ac) = f.anchor();
        (0..img.cols())
            .map(|x| {
                let mut acc = 0.0;
                for r in 0..f.taps().rows() {
                    for c in 0..f.taps().cols() {
                        let y = row as isize + r as isize - ar as isize;
                        let xx = x as isize + c as isize - ac as isize;
                        if let Some(p) = img.get_signed(y, xx) {
                            acc += f.taps().get(r, c) * p;
                        }
                    }
                }
                acc
            })
            .collect()
    }

    #[test]
    fn matched_bar_peaks_on_its_axis() {
        let n = 4;
        for &width in &[8usize, 10, 13] {
            let span = matched_span(width as f64, n);
            let f = boxcar(span, n, FRAC_PI_2, 9.0);
            let cols = 200;
            let left = cols / 2 - width / 2;
            let img = Grid::from_fn(30, cols, |_, c| if c >= left && c < left + width { 1.0 } else { 0.0 });
            let axis = left as f64 + (width as f64 - 1.0) / 2.0;
            let resp = brute_correlation_row(&img, &f, 15);
            let at_axis = resp[axis.round() as usize].max(resp[axis.floor() as usize]);
            for (x, &v) in resp.iter().enumerate() {
                if (x as f64 - axis).abs() >= span / 4.0 {
                    assert!(at_axis > v, "width {width}: offset {x} beats the axis");
                }
            }
        }
    }

    #[test]
    fn bar_as_wide_as_span_gives_no_axis_response() {
        let span = 21.0;
        let f = boxcar(span, 4, FRAC_PI_2, 9.0);
        let img = Grid::from_fn(30, 80, |_, c| if (30..51).contains(&c) { 1.0 } else { 0.0 });
        let resp = brute_correlation_row(&img, &f, 15);
        assert!(resp[40].abs() < 1e-12);
    }

    #[test]
    fn degenerate_specs_are_rejected() {
        assert!(FilterSpec::new(0.0, 4, 0.0, 5.0, Envelope::Boxcar).is_err());
        assert!(FilterSpec::new(10.0, 0, 0.0, 5.0, Envelope::Boxcar).is_err());
        assert!(FilterSpec::new(10.0, 4, 0.0, -1.0, Envelope::Boxcar).is_err());
        assert!(FilterSpec::new(10.0, 4, 0.0, 5.0, Envelope::Gaussian { sigma: 0.0 }).is_err());
        // a sub-pixel span leaves a single support column, which centres to zero
        let spec = FilterSpec::new(0.5, 4, 0.0, 0.5, Envelope::Boxcar).unwrap();
        assert!(matches!(make_filter(&spec), Err(Error::DegenerateFilter)));
    }

    #[test]
    fn matched_span_round_trip() {
        assert_eq!(matched_span(20.0, 4), 90.0);
        assert_eq!(matched_width(90.0, 4), 20.0);
    }
}
