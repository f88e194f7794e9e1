//! Deterministic simulator and analysis toolkit for the one-dimensional
//! discrete-time Hadamard walk with an absorbing detector that can sit
//! still, hop outward on a schedule, jump away for good, or switch off.
//!
//! The crate is organized bottom-up:
//!
//! - [`walk`]: the spinor field on the integer line and the coin/shift step;
//! - [`detector`]: detector policies, projective measurement, and the
//!   detection-count bookkeeping that drives hop schedules;
//! - [`engine`]: full runs with configurable recording, ratio and
//!   mean-square-displacement series, and an in-process run cache;
//! - [`oracle`]: a dense-matrix re-implementation of the whole evolution,
//!   used only to cross-check the fast path;
//! - [`analysis`]: saturation estimates, power-law/linear fits, the
//!   detection-count threshold, hop-length data collapse, site profiles
//!   with their empirical model, and correlation ratios;
//! - [`output`]: plot-ready CSV/JSON tables with provenance headers;
//! - [`verify`]: self-check suites wired to the command-line `verify`.
//!
//! All simulations are exact to double precision and fully deterministic:
//! equal inputs give bit-identical results, and serialized outputs are
//! byte-identical across reruns.

pub mod analysis;
pub mod detector;
pub mod engine;
pub mod error;
pub mod oracle;
pub mod output;
pub mod verify;
pub mod walk;

pub use detector::{DetectionEvent, DetectorPolicy};
pub use engine::{run, RatioSeries, RecordSpec, RunCache, RunResult};
pub use error::{Error, Result};
