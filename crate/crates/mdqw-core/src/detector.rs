//! Absorbing-detector regimes: none, fixed, moving, infinite-jump, quench.
//!
//! The detector performs a projective measurement at its current site once
//! per step (after the walk step): the occupation probability found there is
//! added to the absorbed mass and the site's amplitudes are zeroed, with no
//! renormalization. A moving detector hops `s` sites further after every `n`
//! counted detections; the infinite-jump variant deactivates instead of
//! hopping; the quench variant deactivates at a fixed time.

use crate::error::{Error, Result};
use crate::walk::SpinorField;

/// Measurements removing less probability than this do not count as
/// detections: steps of the wrong parity or before the wavefront arrives
/// find (numerically) zero amplitude, and counting them would break the
/// detection cadence the hop schedule is defined by.
pub const COUNT_THRESHOLD: f64 = 1e-12;

/// Which detector regime a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorPolicy {
    /// No detector; free (infinite) walk.
    None,
    /// Detector fixed at `x_d` forever; semi-infinite walk.
    Fixed { x_d: i64 },
    /// Detector starts at `x_d` and hops `s` sites further after every `n`
    /// counted detections.
    Moving { x_d: i64, n: u32, s: u32 },
    /// Infinite jump: detector starts at `x_d` and is removed after `n`
    /// counted detections.
    MovingIj { x_d: i64, n: u32 },
    /// Quench: detector at `x_d` is removed after time `t_off` (the step at
    /// `t_off` itself still measures).
    Quench { x_d: i64, t_off: u64 },
}

impl DetectorPolicy {
    /// Initial detector site, if the policy has one.
    pub fn initial_position(&self) -> Option<i64> {
        match *self {
            DetectorPolicy::None => None,
            DetectorPolicy::Fixed { x_d }
            | DetectorPolicy::Moving { x_d, .. }
            | DetectorPolicy::MovingIj { x_d, .. }
            | DetectorPolicy::Quench { x_d, .. } => Some(x_d),
        }
    }

    /// Reject parameter combinations the simulator does not define:
    /// a detector at or left of the walker's origin, `n = 0`, or `s = 0`
    /// (replacement in place).
    pub fn validate(&self) -> Result<()> {
        if let Some(x_d) = self.initial_position() {
            if x_d <= 0 {
                return Err(Error::Domain(format!(
                    "detector position x_d = {x_d} must be positive"
                )));
            }
        }
        match *self {
            DetectorPolicy::Moving { n: 0, .. } | DetectorPolicy::MovingIj { n: 0, .. } => {
                Err(Error::Domain("detections per epoch n must be >= 1".into()))
            }
            DetectorPolicy::Moving { s: 0, .. } => {
                Err(Error::Domain("hop length s must be >= 1".into()))
            }
            DetectorPolicy::Quench { t_off: 0, .. } => {
                Err(Error::Domain("quench time t_off must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for DetectorPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            DetectorPolicy::None => write!(f, "iw"),
            DetectorPolicy::Fixed { x_d } => write!(f, "fixed xd={x_d}"),
            DetectorPolicy::Moving { x_d, n, s } => write!(f, "moving xd={x_d} n={n} s={s}"),
            DetectorPolicy::MovingIj { x_d, n } => write!(f, "moving xd={x_d} n={n} s=IJ"),
            DetectorPolicy::Quench { x_d, t_off } => write!(f, "quench xd={x_d} toff={t_off}"),
        }
    }
}

/// One counted detection: the step, the detector site, and the probability
/// removed there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionEvent {
    pub time: u64,
    pub position: i64,
    pub probability: f64,
}

/// Live state of the detector over one run.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorState {
    pub active: bool,
    /// Current detector site (meaningful while a detector exists).
    pub position: i64,
    /// Completed hops.
    pub epoch: u64,
    /// Counted detections at the current site, in `[0, n]`.
    pub count_in_epoch: u32,
    /// Cumulative absorbed probability `d`.
    pub absorbed_total: f64,
    pub events: Vec<DetectionEvent>,
    last_measured: u64,
}

impl DetectorState {
    pub fn new(policy: &DetectorPolicy) -> Self {
        Self {
            active: !matches!(policy, DetectorPolicy::None),
            position: policy.initial_position().unwrap_or(0),
            epoch: 0,
            count_in_epoch: 0,
            absorbed_total: 0.0,
            events: Vec::new(),
            last_measured: 0,
        }
    }
}

/// Apply the per-step projective measurement for `policy`.
///
/// Must be called exactly once per step, after the walk step; the first
/// measurable time is `t = 1`. Returns the counted event, if any. Fails with
/// [`Error::Schedule`] when called twice at the same time (or at `t = 0`).
pub fn measure(
    field: &mut SpinorField,
    det: &mut DetectorState,
    policy: &DetectorPolicy,
) -> Result<Option<DetectionEvent>> {
    let t = field.time();
    if t == det.last_measured {
        return Err(Error::Schedule(format!(
            "measure called twice at t = {t} (or before the first step)"
        )));
    }
    det.last_measured = t;
    if !det.active {
        return Ok(None);
    }
    if let DetectorPolicy::Quench { t_off, .. } = policy {
        if t > *t_off {
            det.active = false;
            return Ok(None);
        }
    }
    // A detector that has hopped beyond the stored lattice never fires again.
    if det.position.abs() > field.half_width() {
        return Ok(None);
    }
    let p = field.project_out(det.position)?;
    det.absorbed_total += p;
    if p <= COUNT_THRESHOLD {
        return Ok(None);
    }
    let event = DetectionEvent {
        time: t,
        position: det.position,
        probability: p,
    };
    det.events.push(event);
    det.count_in_epoch += 1;
    match *policy {
        DetectorPolicy::Moving { n, s, .. } if det.count_in_epoch == n => {
            det.position += i64::from(s);
            det.epoch += 1;
            det.count_in_epoch = 0;
        }
        DetectorPolicy::MovingIj { n, .. } if det.count_in_epoch == n => {
            det.active = false;
        }
        _ => {}
    }
    Ok(Some(event))
}

/// Predicted first-detection time of each epoch for a moving detector and
/// the symmetric seed: the wavefront first reaches `x_d` at `t = x_d`, and
/// epoch `i` first detects at `x_d + i * (2n + s)`.
///
/// Serves as an independent cross-check of the event log produced by
/// [`measure`].
pub fn epoch_start_times(x_d: i64, n: u32, s: u32, i_max: u64) -> Result<Vec<u64>> {
    if x_d <= 0 {
        return Err(Error::Domain(format!("x_d = {x_d} must be positive")));
    }
    let period = u64::from(2 * n + s);
    Ok((0..=i_max).map(|i| x_d as u64 + i * period).collect())
}
