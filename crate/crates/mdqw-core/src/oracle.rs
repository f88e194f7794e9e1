//! Brute-force verification oracle: the walk step as one explicit dense
//! matrix and the measurement as an explicit projector, with the hop
//! schedule re-derived from scratch.
//!
//! Everything here is deliberately independent of the matrix-free stepper
//! and of [`crate::detector::measure`] — shared logic would make the
//! equivalence checks circular. Dense products bound the horizon to small
//! `t_max`.

use num_complex::Complex64 as C64;

use crate::detector::{DetectionEvent, DetectorPolicy};
use crate::engine::RunResult;
use crate::error::{Error, Result};

/// Largest horizon the dense oracle accepts.
pub const ORACLE_MAX_T: u64 = 64;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Per-step spinor arrays (left, right), indexed `x + half_width`.
pub type AmplitudePair = (Vec<C64>, Vec<C64>);

/// Dense step operator `U = S * C` over the `2 * (2X + 1)`-dimensional
/// site-chirality space, stored row-major. Basis ordering: component
/// `2 * i` is the left amplitude of storage index `i` (site `x = i - X`),
/// `2 * i + 1` its right amplitude.
fn step_matrix(half_width: i64) -> Vec<Vec<C64>> {
    let sites = (2 * half_width + 1) as usize;
    let dim = 2 * sites;
    let h = C64::new(FRAC_1_SQRT_2, 0.0);

    // coin: block-diagonal Hadamard on (L, R) at every site
    let mut coin = vec![vec![C64::ZERO; dim]; dim];
    for i in 0..sites {
        coin[2 * i][2 * i] = h;
        coin[2 * i][2 * i + 1] = h;
        coin[2 * i + 1][2 * i] = h;
        coin[2 * i + 1][2 * i + 1] = -h;
    }
    // shift: L moves one site down, R one site up; edge rows stay zero
    let one = C64::new(1.0, 0.0);
    let mut shift = vec![vec![C64::ZERO; dim]; dim];
    for i in 0..sites {
        if i > 0 {
            shift[2 * (i - 1)][2 * i] = one;
        }
        if i + 1 < sites {
            shift[2 * (i + 1) + 1][2 * i + 1] = one;
        }
    }
    let mut u = vec![vec![C64::ZERO; dim]; dim];
    for r in 0..dim {
        for k in 0..dim {
            let s = shift[r][k];
            if s == C64::ZERO {
                continue;
            }
            for c in 0..dim {
                u[r][c] += s * coin[k][c];
            }
        }
    }
    u
}

fn apply(u: &[Vec<C64>], v: &[C64]) -> Vec<C64> {
    u.iter()
        .map(|row| row.iter().zip(v).map(|(m, a)| m * a).sum())
        .collect()
}

/// Everything the dense evolution produces in one pass.
struct OracleTrace {
    half_width: i64,
    /// Post-measurement state at `t = 0..=t_max`.
    states: Vec<AmplitudePair>,
    /// Pre-measurement occupation arrays at `t = 0..=t_max` (at `t = 0`
    /// equal to the initial occupation).
    pre_occupations: Vec<Vec<f64>>,
    absorbed_series: Vec<f64>,
    events: Vec<DetectionEvent>,
}

fn oracle_trace(policy: DetectorPolicy, t_max: u64) -> Result<OracleTrace> {
    policy.validate()?;
    if t_max > ORACLE_MAX_T {
        return Err(Error::Capacity(format!(
            "dense oracle horizon is {ORACLE_MAX_T} steps; {t_max} requested"
        )));
    }
    if t_max < 1 {
        return Err(Error::Domain("t_max must be at least 1".into()));
    }
    let half_width = t_max as i64 + 1;
    let sites = (2 * half_width + 1) as usize;
    let u = step_matrix(half_width);
    let index = |x: i64| (x + half_width) as usize;
    let unpack = |v: &[C64]| -> AmplitudePair {
        let left = (0..sites).map(|i| v[2 * i]).collect();
        let right = (0..sites).map(|i| v[2 * i + 1]).collect();
        (left, right)
    };
    let occupations = |v: &[C64]| {
        (0..sites)
            .map(|i| v[2 * i].norm_sqr() + v[2 * i + 1].norm_sqr())
            .collect()
    };

    let mut v = vec![C64::ZERO; 2 * sites];
    v[2 * index(0)] = C64::new(FRAC_1_SQRT_2, 0.0);
    v[2 * index(0) + 1] = C64::new(0.0, FRAC_1_SQRT_2);

    // schedule state, tracked from first principles
    let mut active = !matches!(policy, DetectorPolicy::None);
    let mut pos = policy.initial_position().unwrap_or(0);
    let mut count = 0u32;
    let mut absorbed = 0.0;

    let mut trace = OracleTrace {
        half_width,
        states: vec![unpack(&v)],
        pre_occupations: vec![occupations(&v)],
        absorbed_series: vec![0.0],
        events: Vec::new(),
    };

    for t in 1..=t_max {
        v = apply(&u, &v);
        trace.pre_occupations.push(occupations(&v));
        if active {
            let off = matches!(policy, DetectorPolicy::Quench { t_off, .. } if t > t_off);
            if off {
                active = false;
            } else if pos.abs() <= half_width {
                let k = 2 * index(pos);
                let p = v[k].norm_sqr() + v[k + 1].norm_sqr();
                v[k] = C64::ZERO;
                v[k + 1] = C64::ZERO;
                absorbed += p;
                if p > 1e-12 {
                    trace.events.push(DetectionEvent {
                        time: t,
                        position: pos,
                        probability: p,
                    });
                    count += 1;
                    match policy {
                        DetectorPolicy::Moving { n, s, .. } if count == n => {
                            pos += i64::from(s);
                            count = 0;
                        }
                        DetectorPolicy::MovingIj { n, .. } if count == n => {
                            active = false;
                        }
                        _ => {}
                    }
                }
            }
        }
        trace.states.push(unpack(&v));
        trace.absorbed_series.push(absorbed);
    }
    Ok(trace)
}

/// Per-step post-measurement amplitude arrays for `t = 0..=t_max`, computed
/// entirely with dense operators.
pub fn oracle_states(policy: DetectorPolicy, t_max: u64) -> Result<Vec<AmplitudePair>> {
    Ok(oracle_trace(policy, t_max)?.states)
}

/// Dense-operator run with the same output contract as [`crate::engine::run`]:
/// snapshots at every step, series at every site, the absorbed-mass series,
/// and the event log.
pub fn oracle_run(policy: DetectorPolicy, t_max: u64) -> Result<RunResult> {
    let trace = oracle_trace(policy, t_max)?;
    let half_width = trace.half_width;
    let sites = (2 * half_width + 1) as usize;

    let mut result = RunResult {
        policy,
        t_max,
        half_width,
        snapshots: Default::default(),
        site_series: (-half_width..=half_width)
            .map(|x| (x, Vec::with_capacity(t_max as usize + 1)))
            .collect(),
        absorbed_series: trace.absorbed_series,
        events: trace.events,
    };
    for (t, (state, pre)) in trace.states.iter().zip(&trace.pre_occupations).enumerate() {
        let f: Vec<f64> = (0..sites)
            .map(|i| state.0[i].norm_sqr() + state.1[i].norm_sqr())
            .collect();
        result.snapshots.insert(t as u64, f);
        for (i, value) in pre.iter().enumerate() {
            let x = i as i64 - half_width;
            result.site_series.get_mut(&x).unwrap().push(*value);
        }
    }
    Ok(result)
}
