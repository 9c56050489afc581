//! Generate, detect and score a held-out split end to end.
//!
//! `cargo run --release --example evaluate -- [out_dir]`

use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use modelock::detect::{Detector, DetectorConfig};
use modelock::io::pgm;
use modelock::metrics::{batch_eval, prediction_path, MatchConfig};
use modelock::scene::{gen_dataset, SceneConfig};

const WIDTHS: [usize; 3] = [12, 18, 24];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/example-out/evaluate".into()));
    let scene_cfg = SceneConfig {
        widths: Some(WIDTHS.to_vec()),
        ..SceneConfig::new((96, 96))
    };
    let manifest = gen_dataset(1, 60, 40, &scene_cfg, &out.join("data"))?;
    let pred = out.join("pred");
    std::fs::create_dir_all(&pred)?;
    let detector = Detector::new(DetectorConfig {
        orientations: vec![FRAC_PI_2],
        ..DetectorConfig::for_widths(&WIDTHS.map(|w| w as f64), 4)
    })?;
    for rec in manifest.test_records() {
        let img = pgm::read_image(&manifest.resolve(&rec.image))?;
        pgm::write_mask(&prediction_path(&pred, rec.id), &detector.detect(&img)?)?;
    }
    let report = batch_eval(&manifest, &pred, &MatchConfig::default())?;
    println!("{} scenes, tolerance {:.2} px", report.scenes, report.tolerance);
    println!("micro p {:.4} r {:.4} f {:.4}", report.micro.precision, report.micro.recall, report.micro.f);
    println!("macro f {:.4} miou {:.4}", report.macro_.f, report.macro_.miou);
    let csv = out.join("per_scene.csv");
    report
        .write_csv(std::fs::File::create(&csv)?)?;
    Ok(())
}
