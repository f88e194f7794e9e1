//! Error type shared by every module of the crate.

use thiserror::Error;

/// All failure modes of simulation, recording, and analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A spinor seed whose total probability is not 1.
    #[error("seed norm |a0|^2+|b0|^2 = {norm} deviates from 1 beyond 1e-12")]
    Normalization { norm: f64 },

    /// Storage cannot hold the requested operation (lattice too small,
    /// amplitude about to shift off the edge, oracle horizon exceeded).
    #[error("capacity: {0}")]
    Capacity(String),

    /// A site outside the lattice was addressed.
    #[error("site {x} outside lattice [-{half_width}, {half_width}]")]
    Index { x: i64, half_width: i64 },

    /// The measurement schedule was violated (two measurements in one step,
    /// or a measurement before the first step).
    #[error("schedule: {0}")]
    Schedule(String),

    /// An argument outside the domain of an operation.
    #[error("domain: {0}")]
    Domain(String),

    /// An analysis was asked for on an empty series.
    #[error("empty series: {0}")]
    EmptySeries(String),

    /// A run result does not contain the requested record.
    #[error("missing record: {0}")]
    MissingRecord(String),

    /// Data unsuitable for a fit (too few points, zero variance, ...).
    #[error("degenerate data: {0}")]
    DegenerateData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
