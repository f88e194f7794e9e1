//! Full-run orchestration: step the walk, apply the detector, record what a
//! study needs (snapshots, per-site series, absorbed mass, events), and
//! derive ratio and mean-square-displacement series from recorded runs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use crate::detector::{measure, DetectionEvent, DetectorPolicy, DetectorState};
use crate::error::{Error, Result};
use crate::walk::SpinorField;

/// Guard for ratio denominators. Parity filtering already removes structural
/// zeros; this skips values that underflowed to (near) zero deep in the
/// exponential tails.
pub const RATIO_GUARD: f64 = 1e-300;

/// What a run should record.
///
/// Site time series sample the occupation *before* the measurement of the
/// step (what the detector sees there); snapshots and the absorbed-mass
/// series describe the state *after* it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct RecordSpec {
    pub snapshot_times: BTreeSet<u64>,
    pub tracked_sites: BTreeSet<i64>,
    pub record_events: bool,
    pub record_absorbed_series: bool,
}

impl RecordSpec {
    pub fn snapshots(times: impl IntoIterator<Item = u64>) -> Self {
        Self {
            snapshot_times: times.into_iter().collect(),
            ..Self::default()
        }
    }

    pub fn sites(sites: impl IntoIterator<Item = i64>) -> Self {
        Self {
            tracked_sites: sites.into_iter().collect(),
            ..Self::default()
        }
    }

    pub fn with_sites(mut self, sites: impl IntoIterator<Item = i64>) -> Self {
        self.tracked_sites.extend(sites);
        self
    }

    pub fn with_events(mut self) -> Self {
        self.record_events = true;
        self
    }

    pub fn with_absorbed_series(mut self) -> Self {
        self.record_absorbed_series = true;
        self
    }
}

/// Everything recorded from one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub policy: DetectorPolicy,
    pub t_max: u64,
    /// Lattice half-width of the stored occupation arrays.
    pub half_width: i64,
    /// time -> occupation array over `[-half_width, +half_width]`.
    pub snapshots: BTreeMap<u64, Vec<f64>>,
    /// site -> occupation at every `t in [0, t_max]` (index = t).
    pub site_series: BTreeMap<i64, Vec<f64>>,
    /// Absorbed mass `d(t)` at every `t in [0, t_max]`; empty if not recorded.
    pub absorbed_series: Vec<f64>,
    pub events: Vec<DetectionEvent>,
}

impl RunResult {
    /// Occupation array at snapshot time `t`.
    pub fn snapshot(&self, t: u64) -> Result<&[f64]> {
        self.snapshots
            .get(&t)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingRecord(format!("no snapshot at t = {t}")))
    }

    /// Occupation at site `x` in the snapshot at time `t`.
    pub fn snapshot_occupation(&self, t: u64, x: i64) -> Result<f64> {
        let snap = self.snapshot(t)?;
        if x.abs() > self.half_width {
            return Err(Error::Index {
                x,
                half_width: self.half_width,
            });
        }
        Ok(snap[(x + self.half_width) as usize])
    }

    /// Recorded time series at site `x`.
    pub fn series(&self, x: i64) -> Result<&[f64]> {
        self.site_series
            .get(&x)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingRecord(format!("site {x} was not tracked")))
    }

    /// The initial detector site of this run's policy.
    pub fn detector_site(&self) -> Result<i64> {
        self.policy
            .initial_position()
            .ok_or_else(|| Error::Domain("run has no detector; no reference site defined".into()))
    }
}

/// Ratio of occupation probabilities between two runs at one site, over the
/// parity-matched times where the denominator is structurally nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioSeries {
    pub site: i64,
    pub times: Vec<u64>,
    pub values: Vec<f64>,
}

impl RatioSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Simulate `policy` for `t_max` steps from the symmetric seed, recording
/// per `spec`. Deterministic: equal inputs produce bit-identical results.
pub fn run(policy: DetectorPolicy, t_max: u64, spec: &RecordSpec) -> Result<RunResult> {
    run_observed(policy, t_max, spec, |_, _| {})
}

/// [`run`] with a per-step observer called after each step's measurement
/// (and once at `t = 0`); used by verification suites that need amplitude-
/// or bookkeeping-level access without recording everything.
pub fn run_observed(
    policy: DetectorPolicy,
    t_max: u64,
    spec: &RecordSpec,
    mut observe: impl FnMut(&SpinorField, &DetectorState),
) -> Result<RunResult> {
    policy.validate()?;
    if t_max < 1 {
        return Err(Error::Domain("t_max must be at least 1".into()));
    }
    let half_width = t_max as i64 + 1;
    if let Some(t) = spec.snapshot_times.last() {
        if *t > t_max {
            return Err(Error::Domain(format!(
                "snapshot time {t} beyond t_max = {t_max}"
            )));
        }
    }
    for &x in &spec.tracked_sites {
        if x.abs() > half_width {
            return Err(Error::Index { x, half_width });
        }
    }

    let mut field = SpinorField::symmetric_seed(half_width)?;
    let mut det = DetectorState::new(&policy);
    let mut result = RunResult {
        policy,
        t_max,
        half_width,
        snapshots: BTreeMap::new(),
        site_series: spec
            .tracked_sites
            .iter()
            .map(|&x| (x, Vec::with_capacity(t_max as usize + 1)))
            .collect(),
        absorbed_series: Vec::new(),
        events: Vec::new(),
    };

    let record_state = |field: &SpinorField, result: &mut RunResult, t: u64, snap: bool| {
        if snap {
            let mut f = Vec::with_capacity((2 * half_width + 1) as usize);
            for x in -half_width..=half_width {
                f.push(field.occupation(x).unwrap());
            }
            result.snapshots.insert(t, f);
        }
    };

    for (&x, series) in result.site_series.iter_mut() {
        series.push(field.occupation(x)?);
    }
    if spec.record_absorbed_series {
        result.absorbed_series.push(0.0);
    }
    record_state(&field, &mut result, 0, spec.snapshot_times.contains(&0));
    observe(&field, &det);

    for t in 1..=t_max {
        field.evolve_step()?;
        for (&x, series) in result.site_series.iter_mut() {
            series.push(field.occupation(x)?);
        }
        measure(&mut field, &mut det, &policy)?;
        if spec.record_absorbed_series {
            result.absorbed_series.push(det.absorbed_total);
        }
        record_state(&field, &mut result, t, spec.snapshot_times.contains(&t));
        observe(&field, &det);
    }
    if spec.record_events {
        result.events = det.events;
    }
    Ok(result)
}

/// Ratio series `f_a(x, t) / f_b(x, t)` over times of the same parity as `x`
/// (other times are structural zeros of both runs), skipping denominators
/// below [`RATIO_GUARD`].
pub fn ratio_series(a: &RunResult, b: &RunResult, x: i64) -> Result<RatioSeries> {
    if a.t_max != b.t_max {
        return Err(Error::Domain(format!(
            "runs have different lengths ({} vs {})",
            a.t_max, b.t_max
        )));
    }
    let fa = a.series(x)?;
    let fb = b.series(x)?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for t in 0..=a.t_max {
        if (x + t as i64) % 2 != 0 {
            continue;
        }
        let denom = fb[t as usize];
        if denom < RATIO_GUARD {
            continue;
        }
        times.push(t);
        values.push(fa[t as usize] / denom);
    }
    Ok(RatioSeries {
        site: x,
        times,
        values,
    })
}

/// Mean square displacement `<x^2>(t) = sum x^2 f / sum f` at every
/// recorded snapshot time.
pub fn msd_series(result: &RunResult) -> Result<Vec<(u64, f64)>> {
    if result.snapshots.is_empty() {
        return Err(Error::MissingRecord("no snapshots recorded".into()));
    }
    let mut out = Vec::with_capacity(result.snapshots.len());
    for (&t, snap) in &result.snapshots {
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, f) in snap.iter().enumerate() {
            let x = i as i64 - result.half_width;
            num += (x * x) as f64 * f;
            den += f;
        }
        out.push((t, num / den));
    }
    Ok(out)
}

/// In-process memo of completed runs, shared by sweeps and reference-run
/// lookups. Keyed by the full input (policy, horizon, record spec);
/// identical requests return the same [`Arc`]'d result.
#[derive(Default)]
pub struct RunCache {
    inner: Mutex<HashMap<(DetectorPolicy, u64, RecordSpec), Arc<RunResult>>>,
}

impl RunCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_run(
        &self,
        policy: DetectorPolicy,
        t_max: u64,
        spec: &RecordSpec,
    ) -> Result<Arc<RunResult>> {
        let key = (policy, t_max, spec.clone());
        if let Some(hit) = self.inner.lock().unwrap().get(&key) {
            return Ok(Arc::clone(hit));
        }
        // run outside the lock so parallel sweeps don't serialize
        let result = Arc::new(run(policy, t_max, spec)?);
        let mut map = self.inner.lock().unwrap();
        Ok(Arc::clone(map.entry(key).or_insert(result)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iw_snapshot_is_symmetric_and_normalized() {
        let spec = RecordSpec::snapshots([1000]);
        let r = run(DetectorPolicy::None, 1000, &spec).unwrap();
        let total: f64 = r.snapshot(1000).unwrap().iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
        for x in 0..=1000 {
            let a = r.snapshot_occupation(1000, x).unwrap();
            let b = r.snapshot_occupation(1000, -x).unwrap();
            assert!((a - b).abs() < 1e-12, "asymmetry at x = {x}");
        }
    }

    #[test]
    fn early_snapshots_match_hand_values() {
        let spec = RecordSpec::snapshots([0, 2]);
        let r = run(DetectorPolicy::None, 2, &spec).unwrap();
        assert!((r.snapshot_occupation(0, 0).unwrap() - 1.0).abs() < 1e-15);
        assert!((r.snapshot_occupation(2, -2).unwrap() - 0.25).abs() < 1e-15);
        assert!((r.snapshot_occupation(2, 0).unwrap() - 0.5).abs() < 1e-15);
        assert!((r.snapshot_occupation(2, 2).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn moving_detector_event_log_via_run() {
        let spec = RecordSpec::default().with_events();
        let r = run(
            DetectorPolicy::Moving {
                x_d: 10,
                n: 2,
                s: 1,
            },
            100,
            &spec,
        )
        .unwrap();
        let times: Vec<u64> = r.events.iter().take(8).map(|e| e.time).collect();
        assert_eq!(times, vec![10, 12, 15, 17, 20, 22, 25, 27]);
    }

    #[test]
    fn fixed_detector_empties_everything_from_its_site_rightward() {
        let spec = RecordSpec::snapshots([1000]);
        let r = run(DetectorPolicy::Fixed { x_d: 10 }, 1000, &spec).unwrap();
        for x in 10..=1000 {
            assert_eq!(r.snapshot_occupation(1000, x).unwrap(), 0.0, "x = {x}");
        }
        assert!(r.snapshot_occupation(1000, 8).unwrap() > 0.0);
    }

    #[test]
    fn ratio_series_of_a_run_with_itself_is_one() {
        let spec = RecordSpec::sites([10]);
        let r = run(
            DetectorPolicy::Moving {
                x_d: 10,
                n: 2,
                s: 1,
            },
            200,
            &spec,
        )
        .unwrap();
        let ratio = ratio_series(&r, &r, 10).unwrap();
        assert!(!ratio.is_empty());
        assert!(ratio.values.iter().all(|v| *v == 1.0));
        // parity: site 10 is populated only at even t >= 10
        assert!(ratio.times.iter().all(|t| t % 2 == 0));
    }

    #[test]
    fn ratio_is_exactly_one_before_the_detector_is_reachable() {
        let spec = RecordSpec::sites([4]);
        let a = run(DetectorPolicy::Moving { x_d: 6, n: 2, s: 1 }, 100, &spec).unwrap();
        let b = run(DetectorPolicy::None, 100, &spec).unwrap();
        let ratio = ratio_series(&a, &b, 4).unwrap();
        for (t, v) in ratio.times.iter().zip(&ratio.values) {
            if *t <= 6 {
                assert_eq!(*v, 1.0, "t = {t}");
            }
        }
    }

    #[test]
    fn ratio_requires_the_site_to_be_tracked() {
        let spec = RecordSpec::sites([10]);
        let r = run(DetectorPolicy::None, 50, &spec).unwrap();
        assert!(matches!(
            ratio_series(&r, &r, 12),
            Err(Error::MissingRecord(_))
        ));
    }

    #[test]
    fn msd_matches_hand_values_and_ballistic_scaling() {
        let spec = RecordSpec::snapshots([1, 2, 500, 1000]);
        let r = run(DetectorPolicy::None, 1000, &spec).unwrap();
        let msd: BTreeMap<u64, f64> = msd_series(&r).unwrap().into_iter().collect();
        assert!((msd[&1] - 1.0).abs() < 1e-12);
        assert!((msd[&2] - 2.0).abs() < 1e-12);
        let q = msd[&1000] / msd[&500];
        assert!((q - 4.0).abs() < 0.16, "<x^2>(1000)/<x^2>(500) = {q}");
    }

    #[test]
    fn runs_are_deterministic() {
        let spec = RecordSpec::snapshots([300]).with_sites([7]).with_events();
        let a = run(DetectorPolicy::Moving { x_d: 7, n: 3, s: 2 }, 300, &spec).unwrap();
        let b = run(DetectorPolicy::Moving { x_d: 7, n: 3, s: 2 }, 300, &spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cache_returns_the_same_result_object() {
        let cache = RunCache::new();
        let spec = RecordSpec::sites([10]);
        let a = cache.get_or_run(DetectorPolicy::None, 100, &spec).unwrap();
        let b = cache.get_or_run(DetectorPolicy::None, 100, &spec).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }

    #[test]
    fn mass_bookkeeping_on_recorded_series() {
        let spec = RecordSpec::snapshots([500]).with_absorbed_series();
        let r = run(DetectorPolicy::Fixed { x_d: 10 }, 500, &spec).unwrap();
        let total: f64 = r.snapshot(500).unwrap().iter().sum();
        assert!((total + r.absorbed_series[500] - 1.0).abs() < 1e-10);
    }
}
