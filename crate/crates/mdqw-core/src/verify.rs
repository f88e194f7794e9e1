//! Self-check suites: the matrix-free stepper against the dense oracle,
//! probability bookkeeping, structural parity, the detection-time identity,
//! and the limiting-case equivalences between detector policies.

use crate::detector::{epoch_start_times, DetectorPolicy};
use crate::engine::{run, run_observed, RecordSpec};
use crate::error::Result;
use crate::oracle::{oracle_states, AmplitudePair};

/// Outcome of one named check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Short measurement summary, e.g. the worst deviation observed.
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }
}

/// Policies exercised by every suite: one of each kind.
fn policy_grid() -> Vec<DetectorPolicy> {
    vec![
        DetectorPolicy::None,
        DetectorPolicy::Fixed { x_d: 10 },
        DetectorPolicy::Moving { x_d: 4, n: 2, s: 1 },
        DetectorPolicy::Moving {
            x_d: 10,
            n: 3,
            s: 2,
        },
        DetectorPolicy::MovingIj { x_d: 4, n: 2 },
        DetectorPolicy::Quench { x_d: 4, t_off: 20 },
    ]
}

/// Stepper-versus-oracle equivalence: per-amplitude agreement at every
/// step of a dense-operator re-simulation, plus identical event logs.
pub fn check_oracle_equivalence(t_max: u64) -> Result<CheckResult> {
    let mut worst = 0.0_f64;
    let mut events_match = true;
    for policy in policy_grid() {
        let oracle = oracle_states(policy, t_max)?;
        let mut fast: Vec<AmplitudePair> = Vec::new();
        let spec = RecordSpec::default().with_events();
        let result = run_observed(policy, t_max, &spec, |field, _| {
            let half = field.half_width();
            let mut left = Vec::with_capacity((2 * half + 1) as usize);
            let mut right = Vec::with_capacity((2 * half + 1) as usize);
            for x in -half..=half {
                let (l, r) = field.amplitudes(x).unwrap();
                left.push(l);
                right.push(r);
            }
            fast.push((left, right));
        })?;
        for (a, b) in oracle.iter().zip(&fast) {
            for (u, v) in a.0.iter().zip(&b.0).chain(a.1.iter().zip(&b.1)) {
                worst = worst.max((u - v).norm());
            }
        }
        let oracle_events = crate::oracle::oracle_run(policy, t_max)?.events;
        if oracle_events.len() != result.events.len()
            || oracle_events.iter().zip(&result.events).any(|(a, b)| {
                a.time != b.time
                    || a.position != b.position
                    || (a.probability - b.probability).abs() > 1e-12
            })
        {
            events_match = false;
        }
    }
    Ok(CheckResult::new(
        "oracle equivalence",
        worst < 1e-12 && events_match,
        format!("max amplitude diff {worst:.3e}, event logs match: {events_match}"),
    ))
}

/// Mass bookkeeping: remaining plus absorbed probability stays 1 at every
/// step of every policy.
pub fn check_conservation(t_max: u64) -> Result<CheckResult> {
    let mut worst = 0.0_f64;
    for policy in policy_grid() {
        run_observed(policy, t_max, &RecordSpec::default(), |field, det| {
            worst = worst.max((field.total_probability() + det.absorbed_total - 1.0).abs());
        })?;
    }
    Ok(CheckResult::new(
        "probability conservation",
        worst < 1e-10,
        format!("max |sum f + d - 1| = {worst:.3e} over {} steps", t_max),
    ))
}

/// Structural parity: occupation vanishes off the sublattice `x ≡ t (mod 2)`
/// and inside-out symmetry of the free walk about the origin.
pub fn check_parity(t_max: u64) -> Result<CheckResult> {
    let mut worst_parity = 0.0_f64;
    let mut worst_symmetry = 0.0_f64;
    for policy in policy_grid() {
        run_observed(policy, t_max, &RecordSpec::default(), |field, _| {
            let t = field.time() as i64;
            for x in -field.half_width()..=field.half_width() {
                if (x + t) % 2 != 0 {
                    worst_parity = worst_parity.max(field.occupation(x).unwrap());
                }
            }
        })?;
    }
    run_observed(
        DetectorPolicy::None,
        t_max,
        &RecordSpec::default(),
        |field, _| {
            for x in 0..=field.half_width() {
                let a = field.occupation(x).unwrap();
                let b = field.occupation(-x).unwrap();
                worst_symmetry = worst_symmetry.max((a - b).abs());
            }
        },
    )?;
    Ok(CheckResult::new(
        "parity and symmetry",
        worst_parity == 0.0 && worst_symmetry < 1e-12,
        format!("off-sublattice mass {worst_parity:.3e}, free-walk asymmetry {worst_symmetry:.3e}"),
    ))
}

/// Detection-time identity: over a parameter grid, the i-th epoch of a
/// moving detector starts at `x_D + i(2n + s)` and its detections within
/// an epoch are 2 steps apart.
pub fn check_timing_identity() -> Result<CheckResult> {
    let mut failures = 0u32;
    let mut checked = 0u32;
    for x_d in [4i64, 10] {
        for n in 1..=4u32 {
            for s in 1..=4u32 {
                let epochs = 3u64;
                let t_max = x_d as u64 + (epochs + 1) * u64::from(2 * n + s);
                let policy = DetectorPolicy::Moving { x_d, n, s };
                let result = run(policy, t_max, &RecordSpec::default().with_events())?;
                let starts = epoch_start_times(x_d, n, s, epochs)?;
                for (i, &start) in starts.iter().enumerate() {
                    for j in 0..u64::from(n) {
                        let k = i * n as usize + j as usize;
                        if k >= result.events.len() {
                            continue;
                        }
                        checked += 1;
                        if result.events[k].time != start + 2 * j {
                            failures += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(CheckResult::new(
        "detection-time identity",
        failures == 0 && checked > 0,
        format!("{checked} event times checked against x_D + i(2n+s) + 2j, {failures} off"),
    ))
}

/// Limiting cases: a never-hopping moving detector equals the fixed one, a
/// quench that never turns off equals the fixed one, and the infinite jump
/// equals a quench at its last detection time.
pub fn check_limiting_cases(t_max: u64) -> Result<CheckResult> {
    let spec = RecordSpec::snapshots([t_max]).with_events();
    let x_d = 4i64;

    let fixed = run(DetectorPolicy::Fixed { x_d }, t_max, &spec)?;
    let frozen = run(
        DetectorPolicy::Moving {
            x_d,
            n: u32::MAX,
            s: 1,
        },
        t_max,
        &spec,
    )?;
    let never_off = run(DetectorPolicy::Quench { x_d, t_off: t_max }, t_max, &spec)?;

    let n = 2u32;
    let ij = run(DetectorPolicy::MovingIj { x_d, n }, t_max, &spec)?;
    let t_n = ij
        .events
        .get(n as usize - 1)
        .map(|e| e.time)
        .unwrap_or(t_max);
    let quench = run(DetectorPolicy::Quench { x_d, t_off: t_n }, t_max, &spec)?;

    let max_diff = |a: &crate::engine::RunResult, b: &crate::engine::RunResult| -> f64 {
        a.snapshot(t_max)
            .unwrap()
            .iter()
            .zip(b.snapshot(t_max).unwrap())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    let d1 = max_diff(&fixed, &frozen);
    let d2 = max_diff(&fixed, &never_off);
    let d3 = max_diff(&ij, &quench);
    let worst = d1.max(d2).max(d3);
    Ok(CheckResult::new(
        "limiting-case equivalences",
        worst == 0.0,
        format!(
            "fixed vs frozen-hop {d1:.3e}, fixed vs never-off quench {d2:.3e}, \
             infinite jump vs quench-at-detection {d3:.3e}"
        ),
    ))
}

/// The full verification battery.
pub fn run_all() -> Result<Vec<CheckResult>> {
    Ok(vec![
        check_oracle_equivalence(32)?,
        check_conservation(400)?,
        check_parity(200)?,
        check_timing_identity()?,
        check_limiting_cases(300)?,
    ])
}
