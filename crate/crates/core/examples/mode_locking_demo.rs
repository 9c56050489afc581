//! Show how phase locking turns a sum of sinusoids into a single pulse:
//! locked phases against random ones for the same wavelengths.

use modelock::wave::{pulse_metrics, ModeLockedBank, SampledWaveform, Wave};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let span = 64.0;
    let n = 8;
    let locked = ModeLockedBank::new(span, n, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let scrambled: Vec<Wave> = locked
        .waves()
        .iter()
        .map(|w| Wave::new(w.amplitude(), w.wavelength(), rng.random_range(0.0..std::f64::consts::TAU)))
        .collect::<modelock::Result<_>>()?;

    let samples = 641;
    let dx = span / (samples - 1) as f64;
    let xs = (0..samples).map(|i| i as f64 * dx);
    let random = SampledWaveform::new(
        xs.map(|x| scrambled.iter().map(|w| w.eval(x)).sum::<f64>() / n as f64).collect(),
        0.0,
        dx,
    )?;
    let locked_wf = locked.sample(0.0, span, samples)?;

    for (name, wf) in [("locked", &locked_wf), ("random", &random)] {
        let peak = wf.samples().iter().cloned().fold(f64::MIN, f64::max);
        let m = pulse_metrics(wf)?;
        println!("{name:>7}: peak {peak:.3} at x = {:.2}, fwhm {:.2}", m.peak_x, m.fwhm);
    }
    for i in (0..samples).step_by(32) {
        let y = locked_wf.samples()[i];
        let bar = "#".repeat(((y.max(0.0)) * 40.0).round() as usize);
        println!("{:>6.1} {y:>+6.3} {bar}", locked_wf.x_at(i));
    }
    Ok(())
}
