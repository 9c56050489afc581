//! Render a small rectangle dataset and describe a few scenes.
//!
//! `cargo run --example generate_dataset -- [out_dir]`

use std::path::PathBuf;

use modelock::scene::{gen_dataset, gen_scene, AxisMode, SceneConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/example-out/dataset".into()));
    let cfg = SceneConfig {
        axis_mode: AxisMode::Both,
        ..SceneConfig::new((128, 128))
    };
    for id in 0..3 {
        let scene = gen_scene(7, id, &cfg)?;
        println!("scene {id}: {:?} axes {:?}", scene.rect, scene.axes);
    }
    let manifest = gen_dataset(7, 40, 30, &cfg, &out)?;
    println!(
        "{} scenes ({} train / {} test) under {}",
        manifest.count,
        manifest.split.0,
        manifest.split.1,
        out.display()
    );
    Ok(())
}
