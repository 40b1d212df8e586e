//! # ocssvm
//!
//! One-class slab support vector machines trained by sequential minimal
//! optimization. A slab is a pair of parallel hyperplanes in feature space;
//! points scoring strictly between them belong to the target class.
//!
//! - [`smo`]: the trainer ([`smo::train`], [`smo::SmoSession`]).
//! - [`eval`]: scoring, decisions, MCC and plot data.
//! - [`reference`]: a dense projected-gradient solver used as an oracle and
//!   timing baseline.
//! - [`io`], [`toy`], [`model_io`]: datasets, synthetic data, model files.
//! - [`bench`]: size sweeps comparing the trainer with the baseline.
//!
//! ## Feature flags
//!
//! - `parallel` (default): per-iteration scans, kernel rows and dense
//!   matrix-vector products run on rayon. Without it the same code runs
//!   sequentially and produces identical results.

pub mod bench;
pub mod error;
pub mod eval;
pub mod io;
pub mod kernel;
pub mod model_io;
mod par;
pub mod reference;
pub mod smo;
pub mod toy;
pub mod types;

pub use error::{OcsError, Result};
pub use eval::{decide, mcc, score, ConfusionCounts, Decision};
pub use kernel::KernelEngine;
pub use smo::{train, GammaState, SmoSession};
pub use types::{
    validate_params, Dataset, GammaBox, HyperParams, KernelSpec, Region, SupportVector, TrainMeta,
    TrainStatus, TrainedModel,
};
