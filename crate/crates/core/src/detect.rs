//! Symmetry-axis detection: max-over-bank response, non-maximum suppression
//! across the winning filter's axis, thresholding and thinning.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::conv::bank_response;
use crate::error::{Error, Result};
use crate::filter::{make_filter_bank, matched_span, Envelope, OrientedFilter};
use crate::grid::{Grid, Image, OrientationMap, ResponseMap};

/// Binary one-pixel-wide axis map.
pub type SkeletonMap = Grid<bool>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    pub spans: Vec<f64>,
    /// Axis directions in radians.
    pub orientations: Vec<f64>,
    pub n: usize,
    pub length: f64,
    pub envelope: Envelope,
    pub nms_radius: usize,
    /// Fraction of the strongest surviving response, in `(0, 1]`.
    pub threshold: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig::for_widths(&[32.0, 64.0, 128.0], 4)
    }
}

impl DetectorConfig {
    /// Spans matched to bars of the given widths, four orientations.
    pub fn for_widths(widths: &[f64], n: usize) -> Self {
        DetectorConfig {
            spans: widths.iter().map(|&w| matched_span(w, n)).collect(),
            orientations: vec![0.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0],
            n,
            length: 9.0,
            envelope: Envelope::Boxcar,
            nms_radius: 2,
            threshold: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::invalid(format!(
                "threshold must be in (0, 1], got {}",
                self.threshold
            )));
        }
        if self.nms_radius < 1 {
            return Err(Error::invalid("nms radius must be >= 1"));
        }
        Ok(())
    }
}

/// Every intermediate of one detection run.
#[derive(Debug, Clone)]
pub struct Detection {
    pub response: ResponseMap,
    pub orientation: OrientationMap,
    pub suppressed: Grid<f64>,
    pub skeleton: SkeletonMap,
}

/// A detector with its filter bank built once.
#[derive(Debug, Clone)]
pub struct Detector {
    config: DetectorConfig,
    bank: Vec<OrientedFilter>,
}

impl Detector {
    pub fn new(config: DetectorConfig) -> Result<Self> {
        config.validate()?;
        let bank = make_filter_bank(
            &config.spans,
            &config.orientations,
            config.n,
            config.length,
            config.envelope,
        )?;
        Ok(Detector { config, bank })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn bank(&self) -> &[OrientedFilter] {
        &self.bank
    }

    pub fn run(&self, img: &Image) -> Result<Detection> {
        let (response, orientation) = bank_response(img, &self.bank)?;
        let thetas: Vec<f64> = self.bank.iter().map(|f| f.spec().orientation).collect();
        let suppressed = nms(&response.values, &orientation, &thetas, self.config.nms_radius);
        let skeleton = thin(&binarize(&suppressed, self.config.threshold));
        Ok(Detection {
            response,
            orientation,
            suppressed,
            skeleton,
        })
    }

    pub fn detect(&self, img: &Image) -> Result<SkeletonMap> {
        Ok(self.run(img)?.skeleton)
    }
}

pub fn detect(img: &Image, config: &DetectorConfig) -> Result<SkeletonMap> {
    Detector::new(config.clone())?.detect(img)
}

/// Zeroes every pixel that is below a bilinear sample at offsets
/// `+-1..=radius` along the normal `(-sin, cos)` of its winning filter's axis.
/// Samples outside the map are skipped; ties survive.
pub fn nms(
    response: &Grid<f64>,
    orientation: &OrientationMap,
    thetas: &[f64],
    radius: usize,
) -> Grid<f64> {
    let snap = |v: f64| if v.abs() < 1e-12 { 0.0 } else { v };
    let normals: Vec<(f64, f64)> = thetas.iter().map(|t| (snap(-t.sin()), snap(t.cos()))).collect();
    Grid::from_fn(response.rows(), response.cols(), |r, c| {
        let v = response.get(r, c);
        let (dx, dy) = normals[orientation.get(r, c)];
        for k in 1..=radius as i64 {
            for sign in [-1.0, 1.0] {
                let step = sign * k as f64;
                let sample = response.bilinear(c as f64 + step * dx, r as f64 + step * dy);
                if matches!(sample, Some(s) if s > v) {
                    return 0.0;
                }
            }
        }
        v
    })
}

/// `value >= threshold * max && value > 0`; all false when nothing is positive.
pub fn binarize(values: &Grid<f64>, threshold: f64) -> Grid<bool> {
    let max = values.max_value();
    if max.is_nan() || max <= 0.0 {
        return values.map(|_| false);
    }
    let cut = threshold * max;
    values.map(|v| v > 0.0 && v >= cut)
}

/// P2..P9, clockwise from north; outside the grid counts as background.
fn neighbours(m: &Grid<bool>, r: usize, c: usize) -> [bool; 8] {
    let (r, c) = (r as isize, c as isize);
    let at = |dr: isize, dc: isize| m.get_signed(r + dr, c + dc).unwrap_or(false);
    [
        at(-1, 0),
        at(-1, 1),
        at(0, 1),
        at(1, 1),
        at(1, 0),
        at(1, -1),
        at(0, -1),
        at(-1, -1),
    ]
}

/// (foreground neighbours, 0 -> 1 transitions around the ring)
fn ring_counts(p: &[bool; 8]) -> (usize, usize) {
    let b = p.iter().filter(|&&v| v).count();
    let a = (0..8).filter(|&i| !p[i] && p[(i + 1) % 8]).count();
    (b, a)
}

fn zs_candidate(p: &[bool; 8], step: usize) -> bool {
    let (b, a) = ring_counts(p);
    if !((2..=6).contains(&b) && a == 1) {
        return false;
    }
    let [p2, _, p4, _, p6, _, p8, _] = *p;
    if step == 0 {
        !(p2 && p4 && p6) && !(p4 && p6 && p8)
    } else {
        !(p2 && p4 && p8) && !(p2 && p6 && p8)
    }
}

/// Zhang-Suen thinning. Candidates of each subiteration are found on a
/// snapshot, then each is deleted only if it is still a simple boundary
/// pixel of the partly thinned image, so small blocks shrink to one pixel
/// instead of vanishing.
pub fn thin(mask: &Grid<bool>) -> SkeletonMap {
    let mut img = mask.clone();
    loop {
        let mut changed = false;
        for step in 0..2 {
            let mut candidates = Vec::new();
            for r in 0..img.rows() {
                for c in 0..img.cols() {
                    if img.get(r, c) && zs_candidate(&neighbours(&img, r, c), step) {
                        candidates.push((r, c));
                    }
                }
            }
            for (r, c) in candidates {
                let (b, a) = ring_counts(&neighbours(&img, r, c));
                if (1..=6).contains(&b) && a == 1 {
                    img.set(r, c, false);
                    changed = true;
                }
            }
        }
        if !changed {
            return img;
        }
    }
}
