//! Compare direct and FFT correlation on a random image.
//!
//! `cargo run --release --example fft_vs_direct`

use std::time::Instant;

use modelock::conv::{correlate_with, Method};
use modelock::filter::{make_filter, matched_span, Envelope, FilterSpec};
use modelock::grid::Image;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let img = Image::from_fn(192, 192, |_, _| rng.random::<f64>())?;
    for w in [4.0, 12.0, 24.0] {
        let spec = FilterSpec::new(matched_span(w, 4), 4, 0.6, 9.0, Envelope::Boxcar)?;
        let f = make_filter(&spec)?;
        let t = Instant::now();
        let direct = correlate_with(&img, &f, Method::Direct)?;
        let td = t.elapsed();
        let t = Instant::now();
        let fft = correlate_with(&img, &f, Method::Fft)?;
        let tf = t.elapsed();
        let diff = direct
            .values
            .as_slice()
            .iter()
            .zip(fft.values.as_slice())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!("kernel {:>3}x{:<3} direct {td:>10.2?} fft {tf:>10.2?} max diff {diff:.2e}", f.taps().rows(), f.taps().cols());
    }
    Ok(())
}
