//! Sample mode-locked pulses for a few mode counts and print their geometry.
//!
//! `cargo run --example synth_wave -- [out_dir]`

use std::path::PathBuf;

use modelock::wave::{pulse_metrics, ModeLockedBank};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/example-out/synth_wave".into()));
    std::fs::create_dir_all(&out)?;
    let span = 100.0;
    println!("{:>3} {:>10} {:>10} {:>12}", "n", "peak_x", "fwhm", "min_sidelobe");
    for n in [1, 2, 4, 8, 16] {
        let wf = ModeLockedBank::new(span, n, 1.0)?.sample(0.0, span, 1001)?;
        let m = pulse_metrics(&wf)?;
        println!("{n:>3} {:>10.3} {:>10.4} {:>12.4}", m.peak_x, m.fwhm, m.min_sidelobe);
        let path = out.join(format!("pulse_n{n}.csv"));
        wf.write_csv(std::fs::File::create(&path)?)?;
    }
    println!("csv files in {}", out.display());
    Ok(())
}
