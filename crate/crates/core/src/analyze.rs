//! Scores 2D response maps for a mode-locked cross-section: a bright band on
//! an axis flanked by suppressed bands, fitted against the bank superposition.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, ResponseMap};
use crate::wave::{pulse_metrics, ModeLockedBank, SampledWaveform};

/// Samples used to measure the fitted template's FWHM.
const FWHM_SAMPLES: usize = 4001;

/// Scores closer than this count as tied, so the tie rule is not at the
/// mercy of rounding.
const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisSource {
    GroundTruth,
    Detected,
    UserSupplied,
}

/// Axis segment `[x0, y0, x1, y1]` in sampling coordinates, where pixel
/// `(r, c)` is centred at `x = c, y = r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisHypothesis {
    pub segment: [f64; 4],
    pub source: AxisSource,
}

impl AxisHypothesis {
    pub fn new(segment: [f64; 4], source: AxisSource) -> Result<Self> {
        let [x0, y0, x1, y1] = segment;
        if segment.iter().any(|v| !v.is_finite()) || (x1 - x0).hypot(y1 - y0) <= 0.0 {
            return Err(Error::invalid("axis segment must have positive finite length"));
        }
        Ok(AxisHypothesis { segment, source })
    }

    /// From a manifest segment, whose coordinates put pixel `(r, c)` on
    /// `[c, c+1] x [r, r+1]`.
    pub fn from_manifest(segment: [f64; 4]) -> Result<Self> {
        let [x0, y0, x1, y1] = segment;
        AxisHypothesis::new([x0 - 0.5, y0 - 0.5, x1 - 0.5, y1 - 0.5], AxisSource::GroundTruth)
    }

    pub fn length(&self) -> f64 {
        let [x0, y0, x1, y1] = self.segment;
        (x1 - x0).hypot(y1 - y0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeLockReport {
    pub ncc_score: f64,
    #[serde(rename = "fitted_L")]
    pub fitted_l: f64,
    pub fitted_n: usize,
    pub center_excitation: bool,
    pub lateral_inhibition: bool,
    /// FWHM of the fitted template, which sets the band widths.
    pub fwhm: f64,
    pub profile: SampledWaveform,
    /// `(mean, std)` of the samples beyond `3 * fwhm`.
    pub background_stats: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalyzeConfig {
    #[serde(rename = "L_range")]
    pub l_range: (f64, f64),
    pub n_range: (usize, usize),
    pub num_cuts: usize,
    /// Defaults to the top of `l_range`.
    pub half_extent: Option<f64>,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig {
            l_range: (8.0, 64.0),
            n_range: (1, 8),
            num_cuts: 32,
            half_extent: None,
        }
    }
}

/// Mean of `num_cuts` bilinear cross-sections perpendicular to the axis.
/// Each has `2 * ceil(half_extent)` unit-spaced samples at half-integer
/// offsets, so the profile is symmetric about the axis. Cuts sit at
/// fractions `(k + 0.5) / num_cuts` along the segment.
pub fn extract_profile(
    map: &ResponseMap,
    axis: &AxisHypothesis,
    num_cuts: usize,
    half_extent: f64,
) -> Result<SampledWaveform> {
    if num_cuts < 3 {
        return Err(Error::invalid(format!("need at least 3 cuts, got {num_cuts}")));
    }
    if !(half_extent > 0.0 && half_extent.is_finite()) {
        return Err(Error::invalid(format!("half extent must be > 0, got {half_extent}")));
    }
    let [x0, y0, x1, y1] = axis.segment;
    let len = axis.length();
    if !(len > 0.0) {
        return Err(Error::invalid("axis segment has zero length"));
    }
    let (dx, dy) = ((x1 - x0) / len, (y1 - y0) / len);
    let (nx, ny) = (-dy, dx);
    let half = half_extent.ceil() as usize;
    let start = -(half as f64) + 0.5;

    let mut sum = vec![0.0; 2 * half];
    for k in 0..num_cuts {
        let f = (k as f64 + 0.5) / num_cuts as f64;
        let (cx, cy) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        for (j, acc) in sum.iter_mut().enumerate() {
            let s = start + j as f64;
            *acc += map
                .values
                .bilinear(cx + s * nx, cy + s * ny)
                .ok_or(Error::AxisOutOfBounds)?;
        }
    }
    let samples = sum.into_iter().map(|v| v / num_cuts as f64).collect();
    SampledWaveform::new(samples, start, 1.0)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for v in values {
        s += v;
        n += 1;
    }
    (n > 0).then(|| s / n as f64)
}

/// Normalized cross-correlation over the template support `|u| <= L/2`;
/// `None` when the template has fewer than 3 samples or no variance there.
fn support_ncc(u: &[f64], y: &[f64], bank: &ModeLockedBank) -> Option<f64> {
    let span = bank.span();
    let idx: Vec<usize> = (0..u.len()).filter(|&i| u[i].abs() <= span / 2.0 + 1e-9).collect();
    if idx.len() < 3 {
        return None;
    }
    let t: Vec<f64> = idx.iter().map(|&i| bank.superpose(u[i] + span / 2.0)).collect();
    let p: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let (tm, _) = mean_std(&t);
    let (pm, _) = mean_std(&p);
    let (mut tp, mut tt, mut pp) = (0.0, 0.0, 0.0);
    for (a, b) in t.iter().zip(&p) {
        let (a, b) = (a - tm, b - pm);
        tp += a * b;
        tt += a * a;
        pp += b * b;
    }
    let scale = (tt * pp).sqrt();
    if tt <= 1e-24 {
        return None;
    }
    Some(if pp <= 1e-24 * tt.max(1.0) { 0.0 } else { (tp / scale).clamp(-1.0, 1.0) })
}

/// Grid search over `L` (unit steps from `Lmin`) and `n`; the profile is
/// centred on the midpoint of its x range. Ties go to the smaller `L`, then
/// the smaller `n`.
pub fn modelock_score(
    profile: &SampledWaveform,
    l_range: (f64, f64),
    n_range: (usize, usize),
) -> Result<ModeLockReport> {
    let (l_min, l_max) = l_range;
    let (n_min, n_max) = n_range;
    if !(l_min > 0.0 && l_min <= l_max && l_max.is_finite()) {
        return Err(Error::invalid(format!("invalid L range ({l_min}, {l_max})")));
    }
    if !(n_min >= 1 && n_min <= n_max) {
        return Err(Error::invalid(format!("invalid n range ({n_min}, {n_max})")));
    }
    let y = profile.samples();
    if y.len() < 3 {
        return Err(Error::invalid("profile needs at least 3 samples"));
    }
    let (_, sd) = mean_std(y);
    if !(sd > 0.0) {
        return Err(Error::DegenerateInput("profile has zero variance".into()));
    }

    let center = (profile.x_at(0) + profile.x_at(y.len() - 1)) / 2.0;
    let u: Vec<f64> = (0..y.len()).map(|i| profile.x_at(i) - center).collect();
    let steps = ((l_max - l_min) + 1e-9).floor() as usize;

    let cells: Vec<Option<(f64, f64, usize)>> = (0..=steps)
        .into_par_iter()
        .map(|k| {
            let l = l_min + k as f64;
            let mut best: Option<(f64, f64, usize)> = None;
            for n in n_min..=n_max {
                let bank = ModeLockedBank::new(l, n, 1.0).ok()?;
                if let Some(c) = support_ncc(&u, y, &bank) {
                    if best.is_none_or(|b| c > b.0 + TIE_EPS) {
                        best = Some((c, l, n));
                    }
                }
            }
            best
        })
        .collect();
    let (ncc, l, n) = cells
        .into_iter()
        .flatten()
        .reduce(|a, b| if b.0 > a.0 + TIE_EPS { b } else { a })
        .ok_or_else(|| Error::DegenerateInput("no template fits inside the profile".into()))?;

    let fwhm = pulse_metrics(&ModeLockedBank::new(l, n, 1.0)?.sample(0.0, l, FWHM_SAMPLES)?)?.fwhm;
    let samples = |pred: &dyn Fn(f64) -> bool| {
        u.iter().zip(y).filter(|(x, _)| pred(**x)).map(|(_, v)| *v).collect::<Vec<_>>()
    };
    let background = samples(&|x| x.abs() > 3.0 * fwhm);
    let (bg_mean, bg_std) = if background.len() >= 2 { mean_std(&background) } else { mean_std(y) };

    let band = |lo: f64, hi: f64| mean_of(u.iter().zip(y).filter(|(x, _)| **x >= lo && **x <= hi).map(|(_, v)| *v));
    let center_excitation = band(-fwhm / 2.0, fwhm / 2.0).is_some_and(|m| m > bg_mean + 2.0 * bg_std);
    let flank_low = |m: Option<f64>| m.is_some_and(|m| m < bg_mean - 0.5 * bg_std);
    let lateral_inhibition =
        flank_low(band(fwhm, 3.0 * fwhm)) && flank_low(band(-3.0 * fwhm, -fwhm));

    Ok(ModeLockReport {
        ncc_score: ncc,
        fitted_l: l,
        fitted_n: n,
        center_excitation,
        lateral_inhibition,
        fwhm,
        profile: profile.clone(),
        background_stats: (bg_mean, bg_std),
    })
}

pub fn analyze_map(map: &ResponseMap, axis: &AxisHypothesis, cfg: &AnalyzeConfig) -> Result<ModeLockReport> {
    let half_extent = cfg.half_extent.unwrap_or(cfg.l_range.1);
    let profile = extract_profile(map, axis, cfg.num_cuts, half_extent)?;
    modelock_score(&profile, cfg.l_range, cfg.n_range)
}

/// Map whose every cross-section perpendicular to the vertical line
/// `x = axis_x` is `profile(x - axis_x)`.
pub fn extrude_vertical(rows: usize, cols: usize, axis_x: f64, profile: impl Fn(f64) -> f64) -> ResponseMap {
    ResponseMap::new(Grid::from_fn(rows, cols, |_, c| profile(c as f64 - axis_x)))
}
