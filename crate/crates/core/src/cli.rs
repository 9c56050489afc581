//! `modelock` command line: argument parsing, config-file merging and the
//! subcommand drivers. The binary is a thin wrapper around [`main_with_args`].
//!
//! Every flag can also be given in a JSON config (`--config run.json`) under
//! the subcommand's section, keyed by the flag name with `-` replaced by `_`:
//!
//! ```json
//! { "gen_data": { "seed": 7, "count": 200, "train": 150, "out": "data" } }
//! ```
//!
//! Flags on the command line win; relative paths in the config resolve
//! against the config file's directory.

use std::ffi::OsString;
use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analyze::{analyze_map, AnalyzeConfig, AxisHypothesis, AxisSource};
use crate::detect::{Detector, DetectorConfig};
use crate::error::{Error, Result};
use crate::filter::{make_filter, matched_span, Envelope, FilterSpec};
use crate::io::{pgm, read_map, write_heatmap};
use crate::metrics::{batch_eval, prediction_path, MatchConfig};
use crate::scene::{gen_dataset, AxisMode, DatasetManifest, Fill, SceneConfig, MANIFEST_FILE};
use crate::wave::{pulse_metrics, ModeLockedBank};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_MISSING_PREDICTION: i32 = 4;
pub const EXIT_DEGENERATE: i32 = 5;

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_)
        | Error::FilterTooLarge { .. }
        | Error::EmptyBank
        | Error::AxisOutOfBounds => EXIT_USAGE,
        Error::Io { .. } | Error::Format { .. } | Error::Json(_) | Error::ShapeMismatch { .. } => EXIT_IO,
        Error::MissingPrediction(_) => EXIT_MISSING_PREDICTION,
        Error::DegenerateInput(_) | Error::DegenerateFilter => EXIT_DEGENERATE,
    }
}

#[derive(Debug, Parser)]
#[command(name = "modelock", version, about = "Mode-locked filters, synthetic symmetry-axis data and feature-map analysis")]
pub struct Cli {
    /// JSON file supplying defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print one JSON line on success and nothing else.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a mode-locked superposition over [0, span] as CSV.
    SynthWave(SynthWaveArgs),
    /// Generate the rectangle dataset.
    GenData(GenDataArgs),
    /// Detect symmetry axes on every test image.
    Detect(DetectArgs),
    /// Score predicted skeletons against the labels.
    Eval(EvalArgs),
    /// Fit a mode-locked cross-section to a feature map.
    Analyze(AnalyzeArgs),
}

trait Merge: Sized {
    /// Fields set in `self` win over `base`.
    fn merge(self, base: Self) -> Self;
    /// Joins relative paths onto `dir`.
    fn rebase(self, dir: &Path) -> Self;
}

fn rebase_path(p: Option<PathBuf>, dir: &Path) -> Option<PathBuf> {
    p.map(|p| if p.is_relative() { dir.join(p) } else { p })
}

macro_rules! mergeable {
    ($ty:ty { $($field:ident),* } paths { $($path:ident),* }) => {
        impl Merge for $ty {
            fn merge(self, base: Self) -> Self {
                Self { $($field: self.$field.or(base.$field),)* $($path: self.$path.or(base.$path),)* }
            }
            fn rebase(self, dir: &Path) -> Self {
                Self { $($path: rebase_path(self.$path, dir),)* ..self }
            }
        }
    };
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthWaveArgs {
    /// Bank span L in pixels.
    #[arg(long)]
    pub span: Option<f64>,
    /// Number of locked modes.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Also include the fundamental (q = 1).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub fundamental: Option<bool>,
    /// CSV output; metrics go to the same stem with `.metrics.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the vertical 2D filter (length = span) as a PGM heatmap.
    #[arg(long)]
    pub filter_heatmap: Option<PathBuf>,
}
mergeable!(SynthWaveArgs { span, n, amplitude, samples, fundamental } paths { out, filter_heatmap });

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenDataArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub train: Option<usize>,
    /// Canvas height and width.
    #[arg(long, num_args = 2, value_names = ["H", "W"])]
    pub canvas: Option<Vec<usize>>,
    #[arg(long)]
    pub label_width: Option<usize>,
    /// vertical, horizontal or both.
    #[arg(long)]
    pub axis_mode: Option<AxisMode>,
    /// Draw one-pixel outlines instead of filled rectangles.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub outline: Option<bool>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
mergeable!(GenDataArgs { seed, count, train, canvas, label_width, axis_mode, outline } paths { out });

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Filter spans in pixels.
    #[arg(long, num_args = 1.., conflicts_with = "widths")]
    pub spans: Option<Vec<f64>>,
    /// Object widths; each becomes the span matched to it.
    #[arg(long, num_args = 1..)]
    pub widths: Option<Vec<f64>>,
    /// Axis orientations in degrees.
    #[arg(long, num_args = 1..)]
    pub orients: Option<Vec<f64>>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Along-axis filter length in pixels.
    #[arg(long)]
    pub length: Option<f64>,
    /// Gaussian along-axis envelope of this sigma instead of a box.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub nms_radius: Option<usize>,
    /// Also write response heatmaps under `<out>/heatmaps/`.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub heatmaps: Option<bool>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
mergeable!(DetectArgs { spans, widths, orients, n, length, sigma, threshold, nms_radius, heatmaps } paths { manifest, out });

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Directory of `{id:05}.pgm` predictions.
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Matching radius in pixels (default max(2, 0.0075 * diagonal)).
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Aggregate JSON; per-scene CSV goes beside it with `.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
mergeable!(EvalArgs { tolerance } paths { manifest, pred, out });

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeArgs {
    /// MLAR1 or PGM feature map.
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Axis segment in pixel-centre coordinates.
    #[arg(long, num_args = 4, value_names = ["X0", "Y0", "X1", "Y1"], allow_negative_numbers = true)]
    pub axis: Option<Vec<f64>>,
    /// Take the first axis of this scene from `--manifest`.
    #[arg(long, conflicts_with = "axis", requires = "manifest")]
    pub axis_from_manifest: Option<u64>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long = "Lmin")]
    #[serde(rename = "Lmin")]
    pub l_min: Option<f64>,
    #[arg(long = "Lmax")]
    #[serde(rename = "Lmax")]
    pub l_max: Option<f64>,
    #[arg(long)]
    pub nmin: Option<usize>,
    #[arg(long)]
    pub nmax: Option<usize>,
    #[arg(long)]
    pub num_cuts: Option<usize>,
    #[arg(long)]
    pub half_extent: Option<f64>,
    /// Report JSON; the profile CSV goes beside it with `.profile.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the map as a PGM heatmap.
    #[arg(long)]
    pub heatmap: Option<PathBuf>,
}
mergeable!(AnalyzeArgs { axis, axis_from_manifest, l_min, l_max, nmin, nmax, num_cuts, half_extent } paths { map, manifest, out, heatmap });

/// Config-file mirror of the command line.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub quiet: Option<bool>,
    pub synth_wave: Option<SynthWaveArgs>,
    pub gen_data: Option<GenDataArgs>,
    pub detect: Option<DetectArgs>,
    pub eval: Option<EvalArgs>,
    pub analyze: Option<AnalyzeArgs>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::format("config", e.to_string()))
    }
}

fn layer<T: Merge>(cli: T, section: Option<T>, dir: &Path) -> T {
    match section {
        Some(cfg) => cli.merge(cfg.rebase(dir)),
        None => cli,
    }
}

fn required<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| Error::invalid(format!("missing required --{flag}")))
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
        }
        _ => Ok(()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    create_parent(path)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn path_with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}{suffix}"))
}

/// Outcome of one subcommand: a human summary and the `--quiet` JSON line.
struct Outcome {
    lines: Vec<String>,
    summary: Value,
}

fn synth_wave(a: SynthWaveArgs) -> Result<Outcome> {
    let span = required(a.span, "span")?;
    let n = required(a.n, "n")?;
    let out = required(a.out, "out")?;
    let amplitude = a.amplitude.unwrap_or(1.0);
    let samples = a.samples.unwrap_or(1001);
    if samples < 3 {
        return Err(Error::invalid("--samples must be at least 3"));
    }
    let bank = if a.fundamental.unwrap_or(false) {
        ModeLockedBank::with_fundamental(span, n, amplitude)?
    } else {
        ModeLockedBank::new(span, n, amplitude)?
    };
    let wf = bank.sample(0.0, span, samples)?;
    let metrics = pulse_metrics(&wf)?;
    write_text(&out, &wf.to_csv_string())?;
    let metrics_path = path_with_suffix(&out, ".metrics.json");
    write_text(&metrics_path, &(serde_json::to_string_pretty(&metrics)? + "\n"))?;
    if let Some(path) = &a.filter_heatmap {
        let filter = make_filter(&FilterSpec::new(span, n, PI / 2.0, span, Envelope::Boxcar)?)?;
        create_parent(path)?;
        write_heatmap(path, filter.taps())?;
    }
    Ok(Outcome {
        lines: vec![
            format!("wrote {} samples to {}", samples, out.display()),
            format!("fwhm {:.6} min_sidelobe {:.6}", metrics.fwhm, metrics.min_sidelobe),
        ],
        summary: json!({
            "command": "synth-wave",
            "csv": out,
            "metrics": metrics_path,
            "fwhm": metrics.fwhm,
            "peak_x": metrics.peak_x,
            "peak_value": metrics.peak_value,
            "min_sidelobe": metrics.min_sidelobe,
        }),
    })
}

fn gen_data(a: GenDataArgs) -> Result<Outcome> {
    let out = required(a.out, "out")?;
    let canvas = match a.canvas.as_deref() {
        None => crate::scene::DEFAULT_CANVAS,
        Some(&[h, w]) => (h, w),
        Some(other) => return Err(Error::invalid(format!("--canvas takes H W, got {other:?}"))),
    };
    let cfg = SceneConfig {
        canvas,
        label_width: a.label_width.unwrap_or(1),
        axis_mode: a.axis_mode.unwrap_or_default(),
        fill: if a.outline.unwrap_or(false) { Fill::Outline } else { Fill::Solid },
        widths: None,
    };
    let seed = a.seed.unwrap_or(0);
    let count = a.count.unwrap_or(crate::scene::DEFAULT_COUNT);
    let train = a.train.unwrap_or(crate::scene::DEFAULT_TRAIN);
    let manifest = gen_dataset(seed, count, train, &cfg, &out)?;
    let path = out.join(MANIFEST_FILE);
    Ok(Outcome {
        lines: vec![path.display().to_string()],
        summary: json!({
            "command": "gen-data",
            "manifest": path,
            "count": manifest.count,
            "train": manifest.split.0,
            "test": manifest.split.1,
        }),
    })
}

fn detector_config(a: &DetectArgs) -> Result<DetectorConfig> {
    let mut cfg = DetectorConfig::default();
    if let Some(n) = a.n {
        cfg.n = n;
    }
    match (&a.spans, &a.widths) {
        (Some(_), Some(_)) => return Err(Error::invalid("give --spans or --widths, not both")),
        (Some(spans), None) => cfg.spans = spans.clone(),
        (None, Some(widths)) => cfg.spans = widths.iter().map(|&w| matched_span(w, cfg.n)).collect(),
        // the default spans were matched for the default n
        (None, None) => {
            cfg.spans = [32.0, 64.0, 128.0].iter().map(|&w| matched_span(w, cfg.n)).collect()
        }
    }
    if let Some(orients) = &a.orients {
        cfg.orientations = orients.iter().map(|d| d.to_radians()).collect();
    }
    if let Some(length) = a.length {
        cfg.length = length;
    }
    if let Some(sigma) = a.sigma {
        cfg.envelope = Envelope::Gaussian { sigma };
    }
    if let Some(t) = a.threshold {
        cfg.threshold = t;
    }
    if let Some(r) = a.nms_radius {
        cfg.nms_radius = r;
    }
    Ok(cfg)
}

fn detect(a: DetectArgs) -> Result<Outcome> {
    let manifest_path = required(a.manifest.clone(), "manifest")?;
    let out = required(a.out.clone(), "out")?;
    let detector = Detector::new(detector_config(&a)?)?;
    let manifest = DatasetManifest::load(&manifest_path)?;
    let heatmaps = a.heatmaps.unwrap_or(false);
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    if heatmaps {
        let dir = out.join("heatmaps");
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    let tests: Vec<_> = manifest.test_records().collect();
    tests.par_iter().try_for_each(|rec| {
        let img = pgm::read_image(&manifest.resolve(&rec.image))?;
        let det = detector.run(&img)?;
        pgm::write_mask(&prediction_path(&out, rec.id), &det.skeleton)?;
        if heatmaps {
            write_heatmap(&prediction_path(&out.join("heatmaps"), rec.id), &det.response.values)?;
        }
        Ok::<_, Error>(())
    })?;
    Ok(Outcome {
        lines: vec![format!("wrote {} skeletons to {}", tests.len(), out.display())],
        summary: json!({
            "command": "detect",
            "out": out,
            "scenes": tests.len(),
            "config": detector.config(),
        }),
    })
}

fn eval(a: EvalArgs) -> Result<Outcome> {
    let manifest = DatasetManifest::load(&required(a.manifest, "manifest")?)?;
    let pred = required(a.pred, "pred")?;
    let report = batch_eval(&manifest, &pred, &MatchConfig { tolerance: a.tolerance })?;
    let mut lines = vec![format!("{:.4}", report.micro.f)];
    let mut summary = json!({
        "command": "eval",
        "micro_f": format!("{:.4}", report.micro.f),
        "report": &report,
    });
    if let Some(out) = a.out {
        write_text(&out, &(serde_json::to_string_pretty(&report)? + "\n"))?;
        let csv = out.with_extension("csv");
        let mut buf = Vec::new();
        report.write_csv(&mut buf).map_err(|e| Error::io(&csv, e))?;
        std::fs::write(&csv, buf).map_err(|e| Error::io(&csv, e))?;
        lines.push(format!("wrote {} and {}", out.display(), csv.display()));
        summary["out"] = json!(out);
        summary["csv"] = json!(csv);
    }
    Ok(Outcome { lines, summary })
}

fn analyze(a: AnalyzeArgs) -> Result<Outcome> {
    let map = read_map(&required(a.map, "map")?)?;
    let axis = match (a.axis, a.axis_from_manifest) {
        (Some(seg), None) => {
            let seg: [f64; 4] = seg
                .try_into()
                .map_err(|_| Error::invalid("--axis takes X0 Y0 X1 Y1"))?;
            AxisHypothesis::new(seg, AxisSource::UserSupplied)?
        }
        (None, Some(id)) => {
            let manifest = DatasetManifest::load(&required(a.manifest, "manifest")?)?;
            let rec = manifest
                .record(id)
                .ok_or_else(|| Error::invalid(format!("scene {id} is not in the manifest")))?;
            let seg = *rec
                .axes
                .first()
                .ok_or_else(|| Error::invalid(format!("scene {id} has no axis")))?;
            AxisHypothesis::from_manifest(seg)?
        }
        (Some(_), Some(_)) => return Err(Error::invalid("give --axis or --axis-from-manifest, not both")),
        (None, None) => return Err(Error::invalid("missing required --axis or --axis-from-manifest")),
    };
    let defaults = AnalyzeConfig::default();
    let cfg = AnalyzeConfig {
        l_range: (a.l_min.unwrap_or(defaults.l_range.0), a.l_max.unwrap_or(defaults.l_range.1)),
        n_range: (a.nmin.unwrap_or(defaults.n_range.0), a.nmax.unwrap_or(defaults.n_range.1)),
        num_cuts: a.num_cuts.unwrap_or(defaults.num_cuts),
        half_extent: a.half_extent,
    };
    let report = analyze_map(&map, &axis, &cfg)?;
    if let Some(path) = &a.heatmap {
        create_parent(path)?;
        write_heatmap(path, &map.values)?;
    }
    let mut lines = vec![format!(
        "ncc {:.4} L {} n {} center_excitation {} lateral_inhibition {}",
        report.ncc_score, report.fitted_l, report.fitted_n, report.center_excitation, report.lateral_inhibition
    )];
    let mut summary = json!({
        "command": "analyze",
        "ncc_score": report.ncc_score,
        "fitted_L": report.fitted_l,
        "fitted_n": report.fitted_n,
        "center_excitation": report.center_excitation,
        "lateral_inhibition": report.lateral_inhibition,
    });
    if let Some(out) = a.out {
        write_text(&out, &(serde_json::to_string_pretty(&report)? + "\n"))?;
        let csv = path_with_suffix(&out, ".profile.csv");
        write_text(&csv, &report.profile.to_csv_string())?;
        lines.push(format!("wrote {} and {}", out.display(), csv.display()));
        summary["out"] = json!(out);
        summary["profile"] = json!(csv);
    }
    Ok(Outcome { lines, summary })
}

fn execute(cli: Cli) -> Result<(bool, Outcome)> {
    let (cfg, dir) = match &cli.config {
        Some(path) => {
            let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
            (RunConfig::load(path)?, dir)
        }
        None => (RunConfig::default(), PathBuf::new()),
    };
    let quiet = cli.quiet || cfg.quiet.unwrap_or(false);
    let outcome = match cli.command {
        Command::SynthWave(a) => synth_wave(layer(a, cfg.synth_wave, &dir))?,
        Command::GenData(a) => gen_data(layer(a, cfg.gen_data, &dir))?,
        Command::Detect(a) => detect(layer(a, cfg.detect, &dir))?,
        Command::Eval(a) => eval(layer(a, cfg.eval, &dir))?,
        Command::Analyze(a) => analyze(layer(a, cfg.analyze, &dir))?,
    };
    Ok((quiet, outcome))
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    error: String,
    code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    missing: Option<&'a [u64]>,
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = write!(sink, "{text}");
            return code;
        }
    };
    match execute(cli) {
        Ok((quiet, outcome)) => {
            if quiet {
                let _ = writeln!(stdout, "{}", outcome.summary);
            } else {
                for line in outcome.lines {
                    let _ = writeln!(stdout, "{line}");
                }
            }
            EXIT_OK
        }
        Err(err) => {
            let code = exit_code(&err);
            let missing = match &err {
                Error::MissingPrediction(ids) => Some(ids.as_slice()),
                _ => None,
            };
            let line = ErrorLine {
                error: err.to_string(),
                code,
                missing,
            };
            let _ = writeln!(stderr, "error: {}", serde_json::to_string(&line).unwrap_or_default());
            code
        }
    }
}
