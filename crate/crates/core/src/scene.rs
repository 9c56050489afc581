//! Synthetic rectangle scenes labelled with their symmetry axes.
//!
//! Each scene is drawn from a ChaCha stream keyed by `(seed, id)`, so any
//! subset of ids can be generated in any order (or in parallel) and still
//! reproduce byte for byte.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, Image};
use crate::io::pgm;

pub const DEFAULT_CANVAS: (usize, usize) = (256, 256);
pub const DEFAULT_COUNT: usize = 10_000;
pub const DEFAULT_TRAIN: usize = 8_500;
pub const MIN_CANVAS: usize = 16;

const SPLIT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AxisMode {
    #[default]
    Vertical,
    Horizontal,
    Both,
}

impl FromStr for AxisMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vertical" => Ok(AxisMode::Vertical),
            "horizontal" => Ok(AxisMode::Horizontal),
            "both" => Ok(AxisMode::Both),
            other => Err(Error::invalid(format!("unknown axis mode {other:?}"))),
        }
    }
}

impl fmt::Display for AxisMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AxisMode::Vertical => "vertical",
            AxisMode::Horizontal => "horizontal",
            AxisMode::Both => "both",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Fill {
    #[default]
    Solid,
    /// One-pixel outline only.
    Outline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    /// `(height, width)` in pixels.
    pub canvas: (usize, usize),
    pub label_width: usize,
    pub axis_mode: AxisMode,
    pub fill: Fill,
    /// Draw widths from this list instead of `[W/8, W/2]`.
    pub widths: Option<Vec<usize>>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            canvas: DEFAULT_CANVAS,
            label_width: 1,
            axis_mode: AxisMode::Vertical,
            fill: Fill::Solid,
            widths: None,
        }
    }
}

impl SceneConfig {
    pub fn new(canvas: (usize, usize)) -> Self {
        SceneConfig {
            canvas,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let (h, w) = self.canvas;
        if h < MIN_CANVAS || w < MIN_CANVAS {
            return Err(Error::invalid(format!(
                "canvas must be at least {MIN_CANVAS}x{MIN_CANVAS}, got {h}x{w}"
            )));
        }
        if self.label_width < 1 {
            return Err(Error::invalid("label width must be >= 1"));
        }
        if let Some(widths) = &self.widths {
            if widths.is_empty() {
                return Err(Error::invalid("width list is empty"));
            }
            if let Some(bad) = widths.iter().find(|&&ww| ww < 1 || ww + 2 > w) {
                return Err(Error::invalid(format!("width {bad} does not fit a {w}-wide canvas")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn contains(&self, r: usize, c: usize) -> bool {
        c >= self.x && c < self.x + self.w && r >= self.y && r < self.y + self.h
    }

    /// Column holding the vertical axis `x + w/2`.
    pub fn axis_column(&self) -> usize {
        self.x + self.w / 2
    }

    pub fn axis_row(&self) -> usize {
        self.y + self.h / 2
    }
}

/// Axis segment `[x0, y0, x1, y1]` in continuous pixel coordinates
/// (pixel `(r, c)` covers `[c, c+1] x [r, r+1]`).
pub type AxisSegment = [f64; 4];

#[derive(Debug, Clone, PartialEq)]
pub struct RectScene {
    pub id: u64,
    pub image: Image,
    pub label: Image,
    pub rect: Rect,
    pub axes: Vec<AxisSegment>,
    pub label_width: usize,
}

fn scene_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Index range `[lo, hi]` of a band of `width` pixels around `center`,
/// even widths extending one pixel further toward lower indices.
fn band(center: usize, width: usize, lo_clip: usize, hi_clip: usize) -> (usize, usize) {
    let lo = center.saturating_sub(width / 2).max(lo_clip);
    let hi = (center + (width - 1) / 2).min(hi_clip);
    (lo, hi)
}

pub fn gen_scene(seed: u64, id: u64, cfg: &SceneConfig) -> Result<RectScene> {
    cfg.validate()?;
    let (ch, cw) = cfg.canvas;
    let mut rng = scene_rng(seed, id);
    let w = match &cfg.widths {
        Some(list) => list[rng.random_range(0..list.len())],
        None => rng.random_range(cw / 8..=cw / 2),
    };
    let h = rng.random_range(ch / 8..=ch / 2);
    // one pixel of margin on every side
    let x = rng.random_range(1..=cw - w - 1);
    let y = rng.random_range(1..=ch - h - 1);
    let rect = Rect { x, y, w, h };

    if cfg.label_width >= w.min(h) {
        return Err(Error::invalid(format!(
            "label width {} must be below the rectangle's smaller side {} (scene {id})",
            cfg.label_width,
            w.min(h)
        )));
    }

    let image = Grid::from_fn(ch, cw, |r, c| {
        let inside = rect.contains(r, c);
        let on = match cfg.fill {
            Fill::Solid => inside,
            Fill::Outline => inside && (r == y || r == y + h - 1 || c == x || c == x + w - 1),
        };
        if on {
            1.0
        } else {
            0.0
        }
    });

    let mut label = Grid::filled(ch, cw, 0.0);
    let mut axes = Vec::new();
    if matches!(cfg.axis_mode, AxisMode::Vertical | AxisMode::Both) {
        let (c0, c1) = band(rect.axis_column(), cfg.label_width, x, x + w - 1);
        for r in y..y + h {
            for c in c0..=c1 {
                label.set(r, c, 1.0);
            }
        }
        let ax = x as f64 + w as f64 / 2.0;
        axes.push([ax, y as f64, ax, (y + h) as f64]);
    }
    if matches!(cfg.axis_mode, AxisMode::Horizontal | AxisMode::Both) {
        let (r0, r1) = band(rect.axis_row(), cfg.label_width, y, y + h - 1);
        for r in r0..=r1 {
            for c in x..x + w {
                label.set(r, c, 1.0);
            }
        }
        let ay = y as f64 + h as f64 / 2.0;
        axes.push([x as f64, ay, (x + w) as f64, ay]);
    }

    Ok(RectScene {
        id,
        image: Image::new(image)?,
        label: Image::new(label)?,
        rect,
        axes,
        label_width: cfg.label_width,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// One manifest line; paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRecord {
    pub id: u64,
    pub image: String,
    pub label: String,
    pub rect: [usize; 4],
    pub axes: Vec<AxisSegment>,
    pub split: Split,
}

/// Dataset-wide settings, stored as `dataset.json` next to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetInfo {
    pub seed: u64,
    pub canvas: (usize, usize),
    pub count: usize,
    pub train_count: usize,
    pub test_count: usize,
    pub label_width: usize,
    pub axis_mode: AxisMode,
    pub fill: Fill,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub seed: u64,
    pub canvas: (usize, usize),
    pub count: usize,
    /// `(train_count, test_count)`
    pub split: (usize, usize),
    pub records: Vec<ManifestRecord>,
    /// Directory the record paths are relative to.
    pub dir: PathBuf,
}

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const INFO_FILE: &str = "dataset.json";

impl DatasetManifest {
    pub fn resolve(&self, relative: &str) -> PathBuf {
        self.dir.join(relative)
    }

    pub fn test_records(&self) -> impl Iterator<Item = &ManifestRecord> {
        self.records.iter().filter(|r| r.split == Split::Test)
    }

    pub fn record(&self, id: u64) -> Option<&ManifestRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Reads `manifest.jsonl` (and `dataset.json` when present beside it).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut records = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: ManifestRecord = serde_json::from_str(line).map_err(|e| {
                Error::format("manifest", format!("line {}: {e}", lineno + 1))
            })?;
            records.push(rec);
        }
        let ids: BTreeSet<u64> = records.iter().map(|r| r.id).collect();
        if ids.len() != records.len() {
            return Err(Error::format("manifest", "duplicate record ids"));
        }
        if ids.iter().enumerate().any(|(i, &id)| id != i as u64) {
            return Err(Error::format("manifest", "record ids are not dense from 0"));
        }
        let train = records.iter().filter(|r| r.split == Split::Train).count();
        let split = (train, records.len() - train);

        let info_path = dir.join(INFO_FILE);
        let (seed, canvas) = if info_path.exists() {
            let info: DatasetInfo = serde_json::from_str(
                &std::fs::read_to_string(&info_path).map_err(|e| Error::io(&info_path, e))?,
            )?;
            (info.seed, info.canvas)
        } else if let Some(first) = records.first() {
            let label = pgm::read_file(&dir.join(&first.label))?;
            (0, label.shape())
        } else {
            (0, (0, 0))
        };
        Ok(DatasetManifest {
            seed,
            canvas,
            count: records.len(),
            split,
            records,
            dir,
        })
    }
}

/// Seeded permutation of `0..count`; the first `train_count` ids train.
pub fn split_ids(seed: u64, count: usize, train_count: usize) -> Vec<Split> {
    let mut ids: Vec<usize> = (0..count).collect();
    ids.shuffle(&mut scene_rng(seed, SPLIT_STREAM));
    let mut split = vec![Split::Test; count];
    for &id in &ids[..train_count] {
        split[id] = Split::Train;
    }
    split
}

pub fn image_rel_path(id: u64) -> String {
    format!("images/{id:05}.pgm")
}

pub fn label_rel_path(id: u64) -> String {
    format!("labels/{id:05}.pgm")
}

/// Writes `count` image/label PGM pairs, `manifest.jsonl` and `dataset.json`
/// under `out_dir`.
pub fn gen_dataset(
    seed: u64,
    count: usize,
    train_count: usize,
    cfg: &SceneConfig,
    out_dir: &Path,
) -> Result<DatasetManifest> {
    if !(train_count > 0 && train_count < count) {
        return Err(Error::invalid(format!(
            "need 0 < train_count < count, got train {train_count} of {count}"
        )));
    }
    cfg.validate()?;
    for sub in ["images", "labels"] {
        let d = out_dir.join(sub);
        std::fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    let split = split_ids(seed, count, train_count);

    let records = (0..count as u64)
        .into_par_iter()
        .map(|id| {
            let scene = gen_scene(seed, id, cfg)?;
            let image = image_rel_path(id);
            let label = label_rel_path(id);
            pgm::write_image(&out_dir.join(&image), &scene.image)?;
            pgm::write_image(&out_dir.join(&label), &scene.label)?;
            let Rect { x, y, w, h } = scene.rect;
            Ok(ManifestRecord {
                id,
                image,
                label,
                rect: [x, y, w, h],
                axes: scene.axes,
                split: split[id as usize],
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut text = String::with_capacity(count * 160);
    for rec in &records {
        text.push_str(&serde_json::to_string(rec)?);
        text.push('\n');
    }
    let manifest_path = out_dir.join(MANIFEST_FILE);
    std::fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))?;

    let info = DatasetInfo {
        seed,
        canvas: cfg.canvas,
        count,
        train_count,
        test_count: count - train_count,
        label_width: cfg.label_width,
        axis_mode: cfg.axis_mode,
        fill: cfg.fill,
    };
    let info_path = out_dir.join(INFO_FILE);
    std::fs::write(&info_path, serde_json::to_string_pretty(&info)? + "\n")
        .map_err(|e| Error::io(&info_path, e))?;

    Ok(DatasetManifest {
        seed,
        canvas: cfg.canvas,
        count,
        split: (train_count, count - train_count),
        records,
        dir: out_dir.to_path_buf(),
    })
}
