//! Skeleton evaluation: tolerance-matched precision/recall/F and two-class mIoU,
//! per scene and over a dataset's test split.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::io::pgm;
use crate::scene::DatasetManifest;

/// `max(2, 0.0075 * diagonal)` pixels.
pub fn default_tolerance(rows: usize, cols: usize) -> f64 {
    let diag = ((rows * rows + cols * cols) as f64).sqrt();
    (0.0075 * diag).max(2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatchConfig {
    /// Matching radius in pixels; the canvas default when absent.
    pub tolerance: Option<f64>,
}

impl MatchConfig {
    pub fn tolerance_for(&self, shape: (usize, usize)) -> f64 {
        self.tolerance.unwrap_or_else(|| default_tolerance(shape.0, shape.1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl std::ops::Add for Counts {
    type Output = Counts;

    fn add(self, o: Counts) -> Counts {
        Counts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            fn_: self.fn_ + o.fn_,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl From<Counts> for EvalReport {
    fn from(c: Counts) -> Self {
        let predicted = c.tp + c.fp;
        let actual = c.tp + c.fn_;
        let (precision, recall) = if predicted == 0 && actual == 0 {
            (1.0, 1.0)
        } else {
            let p = if predicted == 0 { 0.0 } else { c.tp as f64 / predicted as f64 };
            let r = if actual == 0 { 0.0 } else { c.tp as f64 / actual as f64 };
            (p, r)
        };
        let f = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        EvalReport {
            precision,
            recall,
            f,
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
        }
    }
}

impl EvalReport {
    pub fn counts(&self) -> Counts {
        Counts {
            tp: self.tp,
            fp: self.fp,
            fn_: self.fn_,
        }
    }
}

/// Greedy one-to-one matching of predicted to ground-truth pixels within
/// `tolerance`. Pairs are taken closest first; equal distances are ordered by
/// the raster indices of the two pixels, so swapping the maps swaps fp and fn
/// and nothing else.
pub fn match_counts(pred: &Grid<bool>, gt: &Grid<bool>, tolerance: f64) -> Result<Counts> {
    pred.ensure_same_shape(gt)?;
    if !(tolerance >= 0.0) {
        return Err(Error::invalid(format!("tolerance must be >= 0, got {tolerance}")));
    }
    let cols = pred.cols();
    let reach = tolerance.floor() as isize;
    let tol2 = tolerance * tolerance;

    // (d2, min index, max index, pred index, gt index)
    let mut pairs: Vec<(u64, usize, usize, usize, usize)> = Vec::new();
    for (ip, _) in pred.as_slice().iter().enumerate().filter(|(_, &v)| v) {
        let (r, c) = ((ip / cols) as isize, (ip % cols) as isize);
        for dr in -reach..=reach {
            for dc in -reach..=reach {
                let d2 = (dr * dr + dc * dc) as u64;
                if d2 as f64 > tol2 || gt.get_signed(r + dr, c + dc) != Some(true) {
                    continue;
                }
                let ig = (r + dr) as usize * cols + (c + dc) as usize;
                pairs.push((d2, ip.min(ig), ip.max(ig), ip, ig));
            }
        }
    }
    pairs.sort_unstable();

    let mut pred_used = vec![false; pred.as_slice().len()];
    let mut gt_used = vec![false; pred.as_slice().len()];
    let mut tp = 0;
    for &(_, _, _, ip, ig) in &pairs {
        if pred_used[ip] || gt_used[ig] {
            continue;
        }
        pred_used[ip] = true;
        gt_used[ig] = true;
        tp += 1;
    }
    let n_pred = pred.as_slice().iter().filter(|&&v| v).count();
    let n_gt = gt.as_slice().iter().filter(|&&v| v).count();
    Ok(Counts {
        tp,
        fp: n_pred - tp,
        fn_: n_gt - tp,
    })
}

pub fn f_measure(pred: &Grid<bool>, gt: &Grid<bool>, tolerance: f64) -> Result<EvalReport> {
    Ok(match_counts(pred, gt, tolerance)?.into())
}

/// Mean of foreground and background IoU; a class absent from both maps
/// scores 1.
pub fn miou(pred: &Grid<bool>, gt: &Grid<bool>) -> Result<f64> {
    pred.ensure_same_shape(gt)?;
    let mut inter = [0usize; 2];
    let mut union = [0usize; 2];
    for (&p, &g) in pred.as_slice().iter().zip(gt.as_slice()) {
        for (class, want) in [(0, false), (1, true)] {
            let (a, b) = (p == want, g == want);
            inter[class] += (a && b) as usize;
            union[class] += (a || b) as usize;
        }
    }
    let iou = |k: usize| {
        if union[k] == 0 {
            1.0
        } else {
            inter[k] as f64 / union[k] as f64
        }
    };
    Ok((iou(0) + iou(1)) / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneEval {
    pub id: u64,
    #[serde(flatten)]
    pub report: EvalReport,
    pub miou: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroScores {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
    pub miou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub scenes: usize,
    pub tolerance: f64,
    /// From counts pooled over all scenes.
    pub micro: EvalReport,
    /// Unweighted means of per-scene scores.
    #[serde(rename = "macro")]
    pub macro_: MacroScores,
    #[serde(skip)]
    pub per_scene: Vec<SceneEval>,
}

impl BatchReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "id,precision,recall,f,tp,fp,fn")?;
        for s in &self.per_scene {
            let r = &s.report;
            writeln!(
                out,
                "{},{:.6},{:.6},{:.6},{},{},{}",
                s.id, r.precision, r.recall, r.f, r.tp, r.fp, r.fn_
            )?;
        }
        Ok(())
    }
}

pub fn prediction_path(pred_dir: &Path, id: u64) -> PathBuf {
    pred_dir.join(format!("{id:05}.pgm"))
}

/// Scores `pred_dir/{id:05}.pgm` against the label of every test scene.
pub fn batch_eval(manifest: &DatasetManifest, pred_dir: &Path, cfg: &MatchConfig) -> Result<BatchReport> {
    let tests: Vec<_> = manifest.test_records().collect();
    let missing: Vec<u64> = tests
        .iter()
        .map(|r| r.id)
        .filter(|&id| !prediction_path(pred_dir, id).is_file())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingPrediction(missing));
    }

    let per_scene = tests
        .par_iter()
        .map(|rec| {
            let gt = pgm::read_mask(&manifest.resolve(&rec.label))?;
            let pred = pgm::read_mask(&prediction_path(pred_dir, rec.id))?;
            let tol = cfg.tolerance_for(gt.shape());
            Ok(SceneEval {
                id: rec.id,
                report: f_measure(&pred, &gt, tol)?,
                miou: miou(&pred, &gt)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let total = per_scene
        .iter()
        .fold(Counts::default(), |acc, s| acc + s.report.counts());
    let n = per_scene.len().max(1) as f64;
    let mean = |f: fn(&SceneEval) -> f64| per_scene.iter().map(f).sum::<f64>() / n;
    Ok(BatchReport {
        scenes: per_scene.len(),
        tolerance: cfg.tolerance_for(manifest.canvas),
        micro: total.into(),
        macro_: MacroScores {
            precision: mean(|s| s.report.precision),
            recall: mean(|s| s.report.recall),
            f: mean(|s| s.report.f),
            miou: mean(|s| s.miou),
        },
        per_scene,
    })
}
