//! Acceptance gate: one test per numbered exit criterion, at the stated
//! tolerances. Each test prints a `criterion NN: PASS/FAIL — detail` line;
//! the harness result line per test doubles as the per-criterion verdict.
//!
//! Criteria 6b, 9a, and 10b assert the stated bounds faithfully and are
//! expected to fail: the simulated behavior genuinely violates those
//! bounds (see each test's detail line for the measured values).

use std::collections::BTreeMap;
use std::sync::OnceLock;

use mdqw_core::analysis::{
    collapse, correlation_ratio, fit_linear, fit_power_law, model_params_for, nstar,
    profile_model_residual, r_profile, ratio_saturation, saturation, CollapsePlan, CurveFamily,
    HopSpec, DEFAULT_WINDOW_FRACTION,
};
use mdqw_core::engine::{ratio_series, run, run_observed, RecordSpec, RunCache};
use mdqw_core::oracle::oracle_states;
use mdqw_core::DetectorPolicy;

/// Shared across criteria so overlapping parameter grids reuse runs.
fn cache() -> &'static RunCache {
    static CACHE: OnceLock<RunCache> = OnceLock::new();
    CACHE.get_or_init(RunCache::new)
}

/// The six-policy battery used by the bookkeeping and oracle criteria.
fn policy_battery() -> [DetectorPolicy; 6] {
    [
        DetectorPolicy::None,
        DetectorPolicy::Fixed { x_d: 10 },
        DetectorPolicy::Moving {
            x_d: 10,
            n: 2,
            s: 1,
        },
        DetectorPolicy::Moving {
            x_d: 10,
            n: 30,
            s: 1,
        },
        DetectorPolicy::MovingIj { x_d: 10, n: 2 },
        DetectorPolicy::Quench {
            x_d: 10,
            t_off: 100,
        },
    ]
}

fn verdict(criterion: &str, passed: bool, detail: &str) {
    let tag = if passed { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {tag} — {detail}");
    assert!(passed, "criterion {criterion}: {detail}");
}

/// Σ_x f + d = 1 within 1e-10 at every step of every policy, T = 2000.
#[test]
fn criterion_01_probability_bookkeeping() {
    let mut worst = 0.0f64;
    for policy in policy_battery() {
        run_observed(policy, 2000, &RecordSpec::default(), |field, det| {
            worst = worst.max((field.total_probability() + det.absorbed_total - 1.0).abs());
        })
        .unwrap();
    }
    verdict(
        "01 probability bookkeeping",
        worst < 1e-10,
        &format!("max |sum f + d - 1| = {worst:.2e} over 6 policies, T = 2000"),
    );
}

/// The matrix-free stepper equals the dense-operator oracle per amplitude
/// (< 1e-12) for T = 32 on every policy.
#[test]
fn criterion_02_oracle_equivalence() {
    let mut worst = 0.0f64;
    for policy in policy_battery() {
        let oracle = oracle_states(policy, 32).unwrap();
        let mut step = 0usize;
        run_observed(policy, 32, &RecordSpec::default(), |field, _| {
            let (left, right) = &oracle[step];
            let half = field.half_width();
            for x in -half..=half {
                let (l, r) = field.amplitudes(x).unwrap();
                let i = (x + half) as usize;
                worst = worst.max((l - left[i]).norm()).max((r - right[i]).norm());
            }
            step += 1;
        })
        .unwrap();
    }
    verdict(
        "02 oracle equivalence",
        worst < 1e-12,
        &format!("max per-amplitude difference {worst:.2e} at T = 32"),
    );
}

/// First detection of epoch i lands at exactly x_D + i(2n + s) for the
/// first 5 epochs over the (x_D, n, s) grid.
#[test]
fn criterion_03_detection_time_identity() {
    let mut checked = 0u32;
    let mut off = 0u32;
    for x_d in [4i64, 10] {
        for n in [1u32, 2, 5, 10] {
            for s in [1u32, 3, 10] {
                let period = u64::from(2 * n + s);
                let t_max = x_d as u64 + 5 * period + 2;
                let spec = RecordSpec::default().with_events();
                let result = run(DetectorPolicy::Moving { x_d, n, s }, t_max, &spec).unwrap();
                for i in 0..5u64 {
                    let k = (i as usize) * n as usize;
                    let expected = x_d as u64 + i * period;
                    if expected > t_max {
                        continue;
                    }
                    checked += 1;
                    match result.events.get(k) {
                        Some(e) if e.time == expected => {}
                        _ => off += 1,
                    }
                }
            }
        }
    }
    verdict(
        "03 detection-time identity",
        off == 0 && checked > 0,
        &format!("{checked} epoch starts checked, {off} off schedule"),
    );
}

/// Limiting cases at T = 1000: a detector out at the lattice edge leaves
/// the free walk untouched; a detector that never accumulates enough
/// detections to hop equals the fixed detector; the infinite jump equals
/// a quench at its last detection time.
#[test]
fn criterion_04_limiting_case_equivalences() {
    let t = 1000u64;
    let spec = RecordSpec::snapshots([t]);

    let l1 = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };

    let iw = run(DetectorPolicy::None, t, &spec).unwrap();
    let edge = run(
        DetectorPolicy::Moving {
            x_d: t as i64 + 1,
            n: 2,
            s: 1,
        },
        t,
        &spec,
    )
    .unwrap();
    let da = l1(iw.snapshot(t).unwrap(), edge.snapshot(t).unwrap());

    let fixed = run(DetectorPolicy::Fixed { x_d: 10 }, t, &spec).unwrap();
    let frozen = run(
        DetectorPolicy::Moving {
            x_d: 10,
            n: t as u32,
            s: 1,
        },
        t,
        &spec,
    )
    .unwrap();
    let db = l1(fixed.snapshot(t).unwrap(), frozen.snapshot(t).unwrap());

    let mut dc = 0.0f64;
    for n in [2u32, 15, 30] {
        let ij_spec = RecordSpec::snapshots([t]).with_events();
        let ij = run(DetectorPolicy::MovingIj { x_d: 10, n }, t, &ij_spec).unwrap();
        let t_off = ij.events[n as usize - 1].time;
        let quench = run(DetectorPolicy::Quench { x_d: 10, t_off }, t, &ij_spec).unwrap();
        dc = dc.max(l1(ij.snapshot(t).unwrap(), quench.snapshot(t).unwrap()));
    }

    verdict(
        "04 limiting-case equivalences",
        da <= 1e-12 && db == 0.0 && dc == 0.0,
        &format!(
            "edge detector vs free walk {da:.2e}, frozen hop vs fixed {db:.2e}, \
             infinite jump vs quench-at-detection {dc:.2e}"
        ),
    );
}

/// Saturation falls off as n^-2: per-x_D log-log slope within -2 ± 0.3
/// for n in 16..=40, and sat·n²/x_D² at n = 40 agrees across x_D within
/// a factor of 2.
#[test]
fn criterion_05_inverse_square_saturation_scaling() {
    let t_max = 5000u64;
    let x_ds = [2i64, 6, 10, 14];
    let mut slopes = Vec::new();
    let mut rescaled = Vec::new();
    for &x_d in &x_ds {
        let mut points = Vec::new();
        for n in 16..=40u32 {
            let policy = DetectorPolicy::Moving { x_d, n, s: 1 };
            let sat = ratio_saturation(cache(), policy, x_d, t_max).unwrap().value;
            points.push((f64::from(n), sat));
        }
        let fit = fit_power_law(&points).unwrap();
        slopes.push(fit.slope);
        let sat40 = points.last().unwrap().1;
        rescaled.push(sat40 * 1600.0 / (x_d * x_d) as f64);
    }
    let slopes_ok = slopes.iter().all(|m| (m + 2.0).abs() <= 0.3);
    let lo = rescaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = rescaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread_ok = hi / lo <= 2.0;
    verdict(
        "05 inverse-square saturation scaling",
        slopes_ok && spread_ok,
        &format!(
            "slopes {slopes:.3?} (want -2 ± 0.3), rescaled n=40 values {rescaled:.3?} \
             (max/min = {:.2}, want <= 2)",
            hi / lo
        ),
    );
}

/// The largest detection count whose ratio still saturates at 1 grows
/// linearly with detector distance (r² > 0.95 over x_D = 2, 4, ..., 14).
#[test]
fn criterion_06a_detection_threshold_grows_linearly() {
    let t_max = 5000u64;
    let mut points = Vec::new();
    let mut thresholds = Vec::new();
    for x_d in (2..=14i64).step_by(2) {
        let n = nstar(cache(), x_d, 1, 40, t_max).unwrap();
        thresholds.push((x_d, n));
        points.push((x_d as f64, f64::from(n)));
    }
    let fit = fit_linear(&points).unwrap();
    verdict(
        "06a detection threshold grows linearly",
        fit.r2 > 0.95,
        &format!(
            "n* = {thresholds:?}, linear fit slope {:.3}, r² = {:.4} (want > 0.95)",
            fit.slope, fit.r2
        ),
    );
}

/// Beyond the threshold the saturation stays below 1 for every hop length:
/// x_D = 10, n in {22, 25, 30}, s in {1, 5, 10, 30, IJ}.
///
/// Expected to fail: hop lengths comparable to the detection window push
/// the measured saturation back above 1 for n = 22 and 25 (the bound as
/// stated holds only from n = 28 on, and for all s only near n = 30).
#[test]
fn criterion_06b_saturation_below_one_beyond_threshold() {
    let t_max = 5000u64;
    let hops = [
        HopSpec::Finite(1),
        HopSpec::Finite(5),
        HopSpec::Finite(10),
        HopSpec::Finite(30),
        HopSpec::Infinite,
    ];
    let mut violations = Vec::new();
    for n in [22u32, 25, 30] {
        for hop in hops {
            let sat = ratio_saturation(cache(), hop.policy(10, n), 10, t_max)
                .unwrap()
                .value;
            if sat >= 1.0 {
                violations.push(format!("n={n} s={hop}: {sat:.3}"));
            }
        }
    }
    verdict(
        "06b saturation below one beyond threshold",
        violations.is_empty(),
        &format!(
            "{} of 15 (n, s) combinations saturate at or above 1: [{}]",
            violations.len(),
            violations.join(", ")
        ),
    );
}

/// At x_D = 10, s = 1: few detections leave the ratio saturating above 1,
/// many leave it below 1; and until the first hop has consequences
/// (t ≤ 2n + x_D) the ratio equals the fixed-detector ratio exactly.
#[test]
fn criterion_07_saturation_regimes_and_early_agreement() {
    let t_max = 5000u64;
    let spec = RecordSpec::sites([10]);
    let iw = cache()
        .get_or_run(DetectorPolicy::None, t_max, &spec)
        .unwrap();
    let siw = cache()
        .get_or_run(DetectorPolicy::Fixed { x_d: 10 }, t_max, &spec)
        .unwrap();
    let siw_ratio = ratio_series(&siw, &iw, 10).unwrap();

    let mut sats = BTreeMap::new();
    let mut early_diff = 0.0f64;
    for n in [2u32, 30] {
        let policy = DetectorPolicy::Moving { x_d: 10, n, s: 1 };
        let mdqw = cache().get_or_run(policy, t_max, &spec).unwrap();
        let ratio = ratio_series(&mdqw, &iw, 10).unwrap();
        sats.insert(
            n,
            saturation(&ratio, DEFAULT_WINDOW_FRACTION).unwrap().value,
        );
        let horizon = u64::from(2 * n) + 10;
        for (i, &t) in ratio.times.iter().enumerate() {
            if t > horizon {
                break;
            }
            debug_assert_eq!(siw_ratio.times[i], t);
            early_diff = early_diff.max((ratio.values[i] - siw_ratio.values[i]).abs());
        }
    }
    verdict(
        "07 saturation regimes and early agreement",
        sats[&2] > 1.0 && sats[&30] < 1.0 && early_diff == 0.0,
        &format!(
            "sat(n=2) = {:.3} (want > 1), sat(n=30) = {:.3} (want < 1), \
             max early deviation from fixed-detector ratio {early_diff:.2e}",
            sats[&2], sats[&30]
        ),
    );
}

/// Rescaling the saturation-versus-hop curves by n^0.6 / n^1.2 collapses
/// them: the collapse quality must beat the untransformed baseline.
#[test]
fn criterion_08_hop_length_data_collapse() {
    let t_max = 5000u64;
    let ns = [2u32, 3, 6, 10, 15, 30];
    let hops: Vec<u32> = (1..=50).chain([200]).collect();
    let mut curves = CurveFamily::new();
    for &n in &ns {
        let mut curve = Vec::new();
        for &s in &hops {
            let policy = DetectorPolicy::Moving { x_d: 10, n, s };
            let sat = ratio_saturation(cache(), policy, 10, t_max).unwrap().value;
            curve.push((f64::from(s), sat));
        }
        curves.insert(n, curve);
    }
    let plan = CollapsePlan::estimate(&curves, 0.6, 1.2).unwrap();
    let (_, collapsed_quality) = collapse(&curves, &plan).unwrap();
    let identity = CollapsePlan::identity(ns);
    let (_, baseline_quality) = collapse(&curves, &identity).unwrap();
    verdict(
        "08 hop-length data collapse",
        collapsed_quality < baseline_quality,
        &format!(
            "quality {collapsed_quality:.4} with exponents (0.6, 1.2) vs \
             {baseline_quality:.4} untransformed (lower is better)"
        ),
    );
}

/// Far to the left of the detector the occupation ratio returns to 1
/// within 1e-3 (r ≤ -200 at t = 1000).
///
/// Expected to fail: the left lobe of the walk is reweighted by several
/// units at t = 1000 — the ratio approaches 1 this tightly only at
/// offsets beyond the lobe (r < -714 at this horizon) or at much earlier
/// times. The stated tolerance appears unreachable at t = 1000 for any
/// of the tabulated detector schedules.
#[test]
fn criterion_09a_far_left_profile_near_unity() {
    let t = 1000u64;
    let spec = RecordSpec::snapshots([t]);
    let iw = cache().get_or_run(DetectorPolicy::None, t, &spec).unwrap();
    let mut worst = 0.0f64;
    let mut report = Vec::new();
    for (n, s) in [(2u32, 1u32), (15, 15), (30, 30)] {
        let policy = DetectorPolicy::Moving { x_d: 10, n, s };
        let mdqw = cache().get_or_run(policy, t, &spec).unwrap();
        let profile = r_profile(&mdqw, &iw, t, -1010..=-200).unwrap();
        let dev = profile
            .iter()
            .map(|(_, v)| (v - 1.0).abs())
            .fold(0.0, f64::max);
        report.push(format!("{n}D{s}S: {dev:.2}"));
        worst = worst.max(dev);
    }
    verdict(
        "09a far-left profile near unity",
        worst < 1e-3,
        &format!(
            "max |ratio - 1| over r ≤ -200 at t = 1000: [{}] (want < 1e-3)",
            report.join(", ")
        ),
    );
}

/// To the right of a slow many-detection detector the ratio collapses
/// below 1e-6 at finite offset; model-curve residuals are reported as
/// diagnostics only.
#[test]
fn criterion_09b_right_profile_collapses() {
    let t = 1000u64;
    let spec = RecordSpec::snapshots([t]);
    let iw = cache().get_or_run(DetectorPolicy::None, t, &spec).unwrap();
    let mdqw = cache()
        .get_or_run(
            DetectorPolicy::Moving {
                x_d: 10,
                n: 30,
                s: 1,
            },
            t,
            &spec,
        )
        .unwrap();
    let profile = r_profile(&mdqw, &iw, t, 0..=900).unwrap();
    let first_collapsed = profile.iter().find(|(_, v)| *v < 1e-6).map(|(r, _)| *r);

    let mut residuals = Vec::new();
    for (n, s) in [(2u32, 1u32), (15, 15), (30, 30)] {
        let policy = DetectorPolicy::Moving { x_d: 10, n, s };
        let run_ns = cache().get_or_run(policy, t, &spec).unwrap();
        let prof = r_profile(&run_ns, &iw, t, -200..=200).unwrap();
        let params = model_params_for(n, s).unwrap();
        let rms = profile_model_residual(&prof, &params).unwrap().sqrt();
        residuals.push(format!("{n}D{s}S rms {rms:.3}"));
    }
    verdict(
        "09b right profile collapses",
        first_collapsed.is_some(),
        &format!(
            "30D1S ratio first drops below 1e-6 at r = {first_collapsed:?}; \
             model residuals (reported, not asserted): [{}]",
            residuals.join(", ")
        ),
    );
}

/// Correlation-ratio saturations for a fast shallow detector exceed 1 at
/// offsets around it.
#[test]
fn criterion_10a_correlation_saturations_exceed_one() {
    let t_max = 5000u64;
    let spec = RecordSpec::sites([-10, 10, 20, 50]);
    let iw = cache()
        .get_or_run(DetectorPolicy::None, t_max, &spec)
        .unwrap();
    let mdqw = cache()
        .get_or_run(
            DetectorPolicy::Moving {
                x_d: 10,
                n: 2,
                s: 1,
            },
            t_max,
            &spec,
        )
        .unwrap();
    let mut sats = Vec::new();
    for r in [-20i64, 10, 40] {
        let series = correlation_ratio(&mdqw, &iw, r).unwrap();
        let sat = saturation(&series, DEFAULT_WINDOW_FRACTION).unwrap().value;
        sats.push((r, sat));
    }
    verdict(
        "10a correlation saturations exceed one",
        sats.iter().all(|(_, v)| *v > 1.0),
        &format!("2D1S correlation-ratio saturations {sats:.2?} (want all > 1)"),
    );
}

/// For a slow deep detector the correlation-ratio saturation lies within
/// [0.8, 1.2].
///
/// Expected to fail: the measured saturations converge near 0.55 at every
/// tested offset (stable against longer horizons), below the stated band.
#[test]
fn criterion_10b_correlation_saturations_near_unity() {
    let t_max = 5000u64;
    let spec = RecordSpec::sites([-10, 10, 20, 50]);
    let iw = cache()
        .get_or_run(DetectorPolicy::None, t_max, &spec)
        .unwrap();
    let mdqw = cache()
        .get_or_run(
            DetectorPolicy::Moving {
                x_d: 10,
                n: 30,
                s: 30,
            },
            t_max,
            &spec,
        )
        .unwrap();
    let mut sats = Vec::new();
    for r in [-20i64, 10, 40] {
        let series = correlation_ratio(&mdqw, &iw, r).unwrap();
        let sat = saturation(&series, DEFAULT_WINDOW_FRACTION).unwrap().value;
        sats.push((r, sat));
    }
    verdict(
        "10b correlation saturations near unity",
        sats.iter().all(|(_, v)| (0.8..=1.2).contains(v)),
        &format!("30D30S correlation-ratio saturations {sats:.2?} (want within [0.8, 1.2])"),
    );
}

/// Snapshot convergence at t = 1000: a slow-hopping deep detector looks
/// like the fixed one (L1 < 0.05), and the infinite jump matches the
/// equivalent quench exactly.
#[test]
fn criterion_11_snapshot_convergence() {
    let t = 1000u64;
    let spec = RecordSpec::snapshots([t]);
    let l1 = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum() };

    let siw = run(DetectorPolicy::Fixed { x_d: 10 }, t, &spec).unwrap();
    let slow = cache()
        .get_or_run(
            DetectorPolicy::Moving {
                x_d: 10,
                n: 30,
                s: 1,
            },
            t,
            &spec,
        )
        .unwrap();
    let d_siw = l1(slow.snapshot(t).unwrap(), siw.snapshot(t).unwrap());

    let ij_spec = RecordSpec::snapshots([t]).with_events();
    let ij = run(DetectorPolicy::MovingIj { x_d: 10, n: 2 }, t, &ij_spec).unwrap();
    let t_off = ij.events[1].time;
    let quench = run(DetectorPolicy::Quench { x_d: 10, t_off }, t, &spec).unwrap();
    let d_quench = l1(ij.snapshot(t).unwrap(), quench.snapshot(t).unwrap());

    verdict(
        "11 snapshot convergence",
        d_siw < 0.05 && d_quench == 0.0,
        &format!(
            "L1(slow hopper, fixed) = {d_siw:.4} (want < 0.05), \
             L1(infinite jump, quench) = {d_quench:.2e} (want 0)"
        ),
    );
}
