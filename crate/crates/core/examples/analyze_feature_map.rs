//! Score a response map for a mode-locked cross-section around a known axis.
//!
//! `cargo run --release --example analyze_feature_map -- [out_dir]`

use std::path::PathBuf;

use modelock::analyze::{analyze_map, extrude_vertical, AnalyzeConfig, AxisHypothesis, AxisSource};
use modelock::io::{mlar, write_heatmap};
use modelock::wave::ModeLockedBank;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/example-out/analyze".into()));
    std::fs::create_dir_all(&out)?;
    let bank = ModeLockedBank::new(36.0, 3, 1.0)?;
    let axis_x = 63.5;
    let mut map = extrude_vertical(128, 128, axis_x, |u| {
        if u.abs() <= 18.0 { bank.superpose(18.0 + u) } else { 0.0 }
    });
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let noise = Normal::new(0.0, 0.05).unwrap();
    for v in map.values.as_mut_slice() {
        *v += noise.sample(&mut rng);
    }
    mlar::write_file(&out.join("map.mlar"), &map.values)?;
    write_heatmap(&out.join("map.pgm"), &map.values)?;

    let axis = AxisHypothesis::new([axis_x, 8.0, axis_x, 120.0], AxisSource::UserSupplied)?;
    let cfg = AnalyzeConfig {
        half_extent: Some(48.0),
        ..AnalyzeConfig::default()
    };
    let report = analyze_map(&map, &axis, &cfg)?;
    println!(
        "ncc {:.4}  L {}  n {}  fwhm {:.2}",
        report.ncc_score, report.fitted_l, report.fitted_n, report.fwhm
    );
    println!(
        "center excitation {}  lateral inhibition {}",
        report.center_excitation, report.lateral_inhibition
    );
    report.profile.write_csv(std::fs::File::create(out.join("profile.csv"))?)?;
    Ok(())
}
