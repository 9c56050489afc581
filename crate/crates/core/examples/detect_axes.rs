//! Detect the symmetry axis of one synthetic rectangle and save every stage.
//!
//! `cargo run --release --example detect_axes -- [out_dir]`

use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use modelock::detect::{Detector, DetectorConfig};
use modelock::io::{pgm, write_heatmap};
use modelock::metrics::f_measure;
use modelock::scene::{gen_scene, SceneConfig};

const WIDTHS: [usize; 3] = [16, 24, 32];

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/example-out/detect".into()));
    std::fs::create_dir_all(&out)?;
    let scene_cfg = SceneConfig {
        widths: Some(WIDTHS.to_vec()),
        ..SceneConfig::new((128, 128))
    };
    let scene = gen_scene(3, 0, &scene_cfg)?;
    let detector = Detector::new(DetectorConfig {
        orientations: vec![FRAC_PI_2],
        ..DetectorConfig::for_widths(&WIDTHS.map(|w| w as f64), 4)
    })?;
    let det = detector.run(&scene.image)?;

    pgm::write_image(&out.join("image.pgm"), &scene.image)?;
    write_heatmap(&out.join("response.pgm"), &det.response.values)?;
    write_heatmap(&out.join("suppressed.pgm"), &det.suppressed)?;
    pgm::write_mask(&out.join("skeleton.pgm"), &det.skeleton)?;
    let label = scene.label.to_mask();
    pgm::write_mask(&out.join("label.pgm"), &label)?;

    let r = f_measure(&det.skeleton, &label, 2.0)?;
    println!("rect {:?}", scene.rect);
    println!("precision {:.3} recall {:.3} f {:.3}", r.precision, r.recall, r.f);
    Ok(())
}
