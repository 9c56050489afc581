//! Mode-locked wave banks, oriented mode-locked filters, and the tooling
//! around them: FFT/direct correlation, a synthetic rectangle dataset with
//! symmetry-axis labels, filter-bank axis detection with NMS and thinning,
//! F-measure/mIoU evaluation, and a scorer that checks 2D feature maps for
//! the excitation-plus-lateral-inhibition signature of a mode-locked pulse.
//!
//! The crate ships one runnable example per capability under `examples/`
//! and a `modelock` binary exposing the same pipeline on the command line.

pub mod analyze;
pub mod cli;
pub mod conv;
pub mod detect;
pub mod error;
pub mod filter;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod scene;
pub mod wave;

pub use error::{Error, Result};
