//! Build an oriented bank and dump every kernel as a heatmap.
//!
//! `cargo run --example filter_bank -- [out_dir]`

use std::path::PathBuf;

use modelock::filter::{make_filter_bank, matched_span, Envelope};
use modelock::io::write_heatmap;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/example-out/filter_bank".into()));
    std::fs::create_dir_all(&out)?;
    let n = 3;
    let spans: Vec<f64> = [8.0, 16.0].iter().map(|&w| matched_span(w, n)).collect();
    let orients: Vec<f64> = (0..4).map(|k| k as f64 * std::f64::consts::PI / 4.0).collect();
    let bank = make_filter_bank(&spans, &orients, n, 15.0, Envelope::Gaussian { sigma: 5.0 })?;
    for (i, f) in bank.iter().enumerate() {
        let taps = f.taps();
        let sum: f64 = taps.as_slice().iter().sum();
        let norm = taps.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
        println!(
            "#{i} span {:>6.2} theta {:>5.1} deg  {}x{}  sum {sum:+.1e}  l2 {norm:.6}",
            f.spec().span,
            f.spec().orientation.to_degrees(),
            taps.rows(),
            taps.cols()
        );
        write_heatmap(&out.join(format!("filter_{i:02}.pgm")), taps)?;
        f.save(&out.join(format!("filter_{i:02}.mlar")))?;
    }
    Ok(())
}
