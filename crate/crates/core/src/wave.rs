//! Mode-locked wave banks.
//!
//! A bank over span `L` holds `n` sine components whose wavelengths satisfy
//! `L = q * lambda / 2` with odd `q = 2i + 1` (i = 1..n) and whose phases
//! alternate between `pi` and `0`. Every component then vanishes at `x = 0`
//! and `x = L` and peaks at `x = L / 2`, so the averaged superposition is a
//! single pulse centred on the span, flanked by negative lobes.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::fmt_sig9;

/// One sinusoidal component `A * sin(2 pi x / lambda + phi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wave {
    amplitude: f64,
    wavelength: f64,
    phase: f64,
}

impl Wave {
    /// Builds a wave, normalizing the phase into `[0, 2 pi)`.
    pub fn new(amplitude: f64, wavelength: f64, phase: f64) -> Result<Self> {
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::invalid(format!("amplitude must be > 0, got {amplitude}")));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::invalid(format!("wavelength must be > 0, got {wavelength}")));
        }
        if !phase.is_finite() {
            return Err(Error::invalid("phase must be finite"));
        }
        Ok(Wave {
            amplitude,
            wavelength,
            phase: normalize_phase(phase),
        })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.amplitude * (TAU * x / self.wavelength + self.phase).sin()
    }
}

fn normalize_phase(phase: f64) -> f64 {
    let p = phase.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if p >= TAU {
        0.0
    } else {
        p
    }
}

/// Shortest distance between two phases on the circle.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// A set of mode-locked waves over one span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeLockedBank {
    span: f64,
    n: usize,
    amplitude: f64,
    waves: Vec<Wave>,
}

impl ModeLockedBank {
    /// Components `i = 1..=n`, wavelength `2L / (2i + 1)`, phase `(i mod 2) * pi`.
    pub fn new(span: f64, n: usize, amplitude: f64) -> Result<Self> {
        Self::build(span, n, amplitude, false)
    }

    /// Same as [`ModeLockedBank::new`] plus the fundamental `q = 1` mode with phase 0.
    pub fn with_fundamental(span: f64, n: usize, amplitude: f64) -> Result<Self> {
        Self::build(span, n, amplitude, true)
    }

    fn build(span: f64, n: usize, amplitude: f64, fundamental: bool) -> Result<Self> {
        if !(span > 0.0 && span.is_finite()) {
            return Err(Error::invalid(format!("span must be > 0, got {span}")));
        }
        if n < 1 {
            return Err(Error::invalid("component count n must be >= 1"));
        }
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::invalid(format!("amplitude must be > 0, got {amplitude}")));
        }
        let first = if fundamental { 0 } else { 1 };
        let waves = (first..=n)
            .map(|i| {
                let q = (2 * i + 1) as f64;
                let phase = if i % 2 == 1 { PI } else { 0.0 };
                Wave::new(amplitude, 2.0 * span / q, phase)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ModeLockedBank {
            span,
            n,
            amplitude,
            waves,
        })
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn waves(&self) -> &[Wave] {
        &self.waves
    }

    /// Mean of all components at `x`.
    pub fn superpose(&self, x: f64) -> f64 {
        let sum: f64 = self.waves.iter().map(|w| w.eval(x)).sum();
        sum / self.waves.len() as f64
    }

    pub fn sample(&self, x0: f64, x1: f64, num_samples: usize) -> Result<SampledWaveform> {
        if !(x0.is_finite() && x1.is_finite() && x1 > x0) {
            return Err(Error::invalid(format!("need x1 > x0, got [{x0}, {x1}]")));
        }
        if num_samples < 2 {
            return Err(Error::invalid("num_samples must be >= 2"));
        }
        let last = (num_samples - 1) as f64;
        let samples = (0..num_samples)
            .map(|i| self.superpose(x0 + (x1 - x0) * i as f64 / last))
            .collect();
        SampledWaveform::new(samples, x0, (x1 - x0) / last)
    }
}

pub fn make_bank(span: f64, n: usize, amplitude: f64) -> Result<ModeLockedBank> {
    ModeLockedBank::new(span, n, amplitude)
}

pub fn eval_wave(wave: &Wave, x: f64) -> f64 {
    wave.eval(x)
}

pub fn superpose(bank: &ModeLockedBank, x: f64) -> f64 {
    bank.superpose(x)
}

pub fn sample_superposition(
    bank: &ModeLockedBank,
    x0: f64,
    x1: f64,
    num_samples: usize,
) -> Result<SampledWaveform> {
    bank.sample(x0, x1, num_samples)
}

/// A uniformly sampled 1D signal; sample `i` sits at `x0 + i * dx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledWaveform {
    samples: Vec<f64>,
    x0: f64,
    dx: f64,
}

impl SampledWaveform {
    pub fn new(samples: Vec<f64>, x0: f64, dx: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("waveform needs at least one sample"));
        }
        if !(dx > 0.0 && dx.is_finite()) {
            return Err(Error::invalid(format!("dx must be > 0, got {dx}")));
        }
        Ok(SampledWaveform { samples, x0, dx })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn x_at(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.samples
            .iter()
            .enumerate()
            .map(|(i, &y)| (self.x_at(i), y))
    }

    /// CSV with header `x,y`, nine significant digits per value.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,y")?;
        for (x, y) in self.points() {
            writeln!(out, "{},{}", fmt_sig9(x), fmt_sig9(y))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ascii")
    }
}

/// Geometry of the central pulse of a sampled waveform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseMetrics {
    pub peak_x: f64,
    pub peak_value: f64,
    pub fwhm: f64,
    /// Most negative value within `3 * fwhm` of the peak, outside the main lobe.
    pub min_sidelobe: f64,
}

pub fn pulse_metrics(wf: &SampledWaveform) -> Result<PulseMetrics> {
    let y = wf.samples();
    if y.len() < 3 {
        return Err(Error::invalid("pulse metrics need at least 3 samples"));
    }
    let (mut k, mut peak) = (0, y[0]);
    let mut low = y[0];
    for (i, &v) in y.iter().enumerate() {
        if v > peak {
            peak = v;
            k = i;
        }
        low = low.min(v);
    }
    if peak == low {
        return Err(Error::DegenerateInput("waveform is constant".into()));
    }

    let half = peak / 2.0;
    let left = {
        let mut i = k;
        while i > 0 && y[i - 1] >= half {
            i -= 1;
        }
        if i == 0 {
            wf.x_at(0)
        } else {
            // y[i - 1] < half <= y[i]
            let f = (half - y[i - 1]) / (y[i] - y[i - 1]);
            wf.x_at(i - 1) + f * wf.dx()
        }
    };
    let right = {
        let mut j = k;
        while j + 1 < y.len() && y[j + 1] >= half {
            j += 1;
        }
        if j + 1 == y.len() {
            wf.x_at(j)
        } else {
            let f = (y[j] - half) / (y[j] - y[j + 1]);
            wf.x_at(j) + f * wf.dx()
        }
    };
    let fwhm = right - left;
    if fwhm <= 0.0 {
        return Err(Error::DegenerateInput("pulse has no measurable width".into()));
    }

    // main lobe: contiguous positive run around the peak (or the half-max run
    // when the peak itself is not positive)
    let floor = if peak > 0.0 { 0.0 } else { half };
    let mut a = k;
    while a > 0 && y[a - 1] > floor {
        a -= 1;
    }
    let mut b = k;
    while b + 1 < y.len() && y[b + 1] > floor {
        b += 1;
    }

    let peak_x = wf.x_at(k);
    let in_window = |i: usize| (wf.x_at(i) - peak_x).abs() <= 3.0 * fwhm;
    let outside_lobe = (0..y.len())
        .filter(|&i| in_window(i) && (i < a || i > b))
        .map(|i| y[i])
        .fold(f64::INFINITY, f64::min);
    let min_sidelobe = if outside_lobe.is_finite() {
        outside_lobe
    } else {
        (0..y.len())
            .filter(|&i| in_window(i))
            .map(|i| y[i])
            .fold(f64::INFINITY, f64::min)
    };

    Ok(PulseMetrics {
        peak_x,
        peak_value: peak,
        fwhm,
        min_sidelobe,
    })
}
