//! Property-based invariants: randomized policies, horizons, and data
//! shapes exercising conservation laws, structural zeros, bookkeeping
//! identities, and the dense-oracle equivalence on small horizons.

use proptest::prelude::*;

use mdqw_core::analysis::{
    collapse, correlation_ratio, model_r_profile, saturation, CollapsePlan, CurveFamily,
    MODEL_PARAMS,
};
use mdqw_core::engine::{ratio_series, run, run_observed, RecordSpec};
use mdqw_core::oracle::oracle_states;
use mdqw_core::walk::SpinorField;
use mdqw_core::DetectorPolicy;

/// Any policy with small parameters, so short horizons still see hops,
/// jumps, and quenches actually happen.
fn any_policy() -> impl Strategy<Value = DetectorPolicy> {
    prop_oneof![
        Just(DetectorPolicy::None),
        (1i64..8).prop_map(|x_d| DetectorPolicy::Fixed { x_d }),
        (1i64..8, 1u32..5, 1u32..5).prop_map(|(x_d, n, s)| DetectorPolicy::Moving { x_d, n, s }),
        (1i64..8, 1u32..5).prop_map(|(x_d, n)| DetectorPolicy::MovingIj { x_d, n }),
        (1i64..8, 1u64..20).prop_map(|(x_d, t_off)| DetectorPolicy::Quench { x_d, t_off }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Remaining plus absorbed probability is 1 at every step.
    #[test]
    fn mass_is_conserved(policy in any_policy(), t_max in 1u64..60) {
        let mut worst = 0.0f64;
        run_observed(policy, t_max, &RecordSpec::default(), |field, det| {
            let total = field.total_probability() + det.absorbed_total;
            worst = worst.max((total - 1.0).abs());
        }).unwrap();
        prop_assert!(worst < 1e-10, "mass bookkeeping off by {worst:e}");
    }

    /// No probability ever appears off the sublattice x ≡ t (mod 2) or
    /// outside the light cone |x| ≤ t.
    #[test]
    fn structural_zeros_hold(policy in any_policy(), t_max in 1u64..50) {
        let mut stray = 0.0f64;
        run_observed(policy, t_max, &RecordSpec::default(), |field, _| {
            let t = field.time() as i64;
            for x in -field.half_width()..=field.half_width() {
                if (x + t) % 2 != 0 || x.abs() > t {
                    stray = stray.max(field.occupation(x).unwrap());
                }
            }
        }).unwrap();
        prop_assert!(stray == 0.0, "probability {stray:e} on a structural zero");
    }

    /// The free walk from the symmetric seed stays mirror-symmetric.
    #[test]
    fn free_walk_is_symmetric(t_max in 1u64..80) {
        let mut asym = 0.0f64;
        run_observed(DetectorPolicy::None, t_max, &RecordSpec::default(), |field, _| {
            for x in 1..=field.half_width() {
                let a = field.occupation(x).unwrap();
                let b = field.occupation(-x).unwrap();
                asym = asym.max((a - b).abs());
            }
        }).unwrap();
        prop_assert!(asym < 1e-12, "free-walk asymmetry {asym:e}");
    }

    /// The coin is an involution: applying it twice restores the field.
    #[test]
    fn coin_squares_to_identity(steps in 0u64..12) {
        let mut field = SpinorField::symmetric_seed(16).unwrap();
        for _ in 0..steps {
            field.evolve_step().unwrap();
        }
        let before = field.clone();
        field.coin_step();
        field.coin_step();
        for x in -16..=16 {
            let (l0, r0) = before.amplitudes(x).unwrap();
            let (l1, r1) = field.amplitudes(x).unwrap();
            prop_assert!((l0 - l1).norm() < 1e-12);
            prop_assert!((r0 - r1).norm() < 1e-12);
        }
    }

    /// The shift translates the left component down and the right
    /// component up by exactly one site.
    #[test]
    fn shift_translates_components(steps in 0u64..12) {
        let mut field = SpinorField::symmetric_seed(16).unwrap();
        for _ in 0..steps {
            field.evolve_step().unwrap();
        }
        let before = field.clone();
        field.shift_step().unwrap();
        for x in -15..=15 {
            let (l, _) = field.amplitudes(x).unwrap();
            let (_, r) = field.amplitudes(x).unwrap();
            let (l_src, _) = before.amplitudes(x + 1).unwrap();
            let (_, r_src) = before.amplitudes(x - 1).unwrap();
            prop_assert_eq!(l, l_src);
            prop_assert_eq!(r, r_src);
        }
    }

    /// Every logged detection removed exactly its probability from the
    /// field: the absorbed total equals the sum of event probabilities.
    #[test]
    fn absorbed_mass_equals_event_sum(policy in any_policy(), t_max in 1u64..60) {
        let spec = RecordSpec::default().with_events().with_absorbed_series();
        let result = run(policy, t_max, &spec).unwrap();
        let logged: f64 = result.events.iter().map(|e| e.probability).sum();
        let absorbed = result.absorbed_series.last().copied().unwrap();
        // events below the counting threshold are absorbed but not logged
        prop_assert!(absorbed - logged >= -1e-12);
        prop_assert!(absorbed - logged < 1e-9);
    }

    /// A run divided by itself is exactly 1 wherever defined.
    #[test]
    fn ratio_with_itself_is_one(policy in any_policy(), x in -6i64..6, t_max in 4u64..60) {
        let spec = RecordSpec::sites([x]);
        let result = run(policy, t_max, &spec).unwrap();
        let series = ratio_series(&result, &result, x).unwrap();
        prop_assert!(series.values.iter().all(|v| *v == 1.0));
        for t in &series.times {
            prop_assert_eq!((x + *t as i64) % 2, 0);
        }
    }

    /// Saturation of a constant series is that constant, with no warning.
    #[test]
    fn saturation_of_constant(v in 0.01f64..100.0, k in 5usize..200) {
        let series = mdqw_core::RatioSeries {
            site: 0,
            times: (0..k as u64).collect(),
            values: vec![v; k],
        };
        let est = saturation(&series, 0.2).unwrap();
        prop_assert!((est.value - v).abs() < 1e-12 * v);
        prop_assert!(!est.stationarity_warning);
    }

    /// The identity plan maps any family of identical curves to quality 0.
    #[test]
    fn identity_collapse_of_identical_curves(
        ys in prop::collection::vec(0.0f64..10.0, 3..20),
        ns in prop::collection::btree_set(1u32..50, 2..5),
    ) {
        let curve: Vec<(f64, f64)> =
            ys.iter().enumerate().map(|(i, y)| (i as f64 + 1.0, *y)).collect();
        let curves: CurveFamily = ns.iter().map(|&n| (n, curve.clone())).collect();
        let plan = CollapsePlan::identity(ns);
        let (transformed, quality) = collapse(&curves, &plan).unwrap();
        prop_assert_eq!(quality, 0.0);
        for (n, c) in &transformed {
            prop_assert_eq!(c, &curves[n]);
        }
    }

    /// The profile model evaluated at r = 0 is its offset parameter, for
    /// every tabulated parameter set.
    #[test]
    fn model_offset_at_origin(i in 0usize..MODEL_PARAMS.len()) {
        let (_, p) = MODEL_PARAMS[i];
        prop_assert_eq!(model_r_profile(0.0, &p).unwrap(), p.a);
    }

    /// A run correlated with itself gives exactly 1 at every defined time.
    #[test]
    fn correlation_with_itself_is_one(r in (-10i64..10).prop_map(|v| v * 2), t_max in 30u64..80) {
        let policy = DetectorPolicy::Moving { x_d: 4, n: 2, s: 1 };
        let spec = RecordSpec::sites([4, 4 + r]);
        let result = run(policy, t_max, &spec).unwrap();
        let series = correlation_ratio(&result, &result, r).unwrap();
        prop_assert!(series.values.iter().all(|v| *v == 1.0));
    }

    /// Odd offsets share no support with the detector site: the
    /// correlation series is empty.
    #[test]
    fn correlation_at_odd_offset_is_empty(r in (-10i64..10).prop_map(|v| 2 * v + 1)) {
        let policy = DetectorPolicy::Moving { x_d: 4, n: 2, s: 1 };
        let spec = RecordSpec::sites([4, 4 + r]);
        let result = run(policy, 60, &spec).unwrap();
        let series = correlation_ratio(&result, &result, r).unwrap();
        prop_assert!(series.is_empty());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// The matrix-free stepper agrees with the dense oracle amplitude by
    /// amplitude on random small-horizon runs.
    #[test]
    fn oracle_agrees_on_small_horizons(policy in any_policy(), t_max in 1u64..16) {
        let oracle = oracle_states(policy, t_max).unwrap();
        let mut step = 0usize;
        let mut worst = 0.0f64;
        run_observed(policy, t_max, &RecordSpec::default(), |field, _| {
            let (left, right) = &oracle[step];
            let half = field.half_width();
            for x in -half..=half {
                let (l, r) = field.amplitudes(x).unwrap();
                let i = (x + half) as usize;
                worst = worst.max((l - left[i]).norm()).max((r - right[i]).norm());
            }
            step += 1;
        }).unwrap();
        prop_assert!(worst < 1e-12, "stepper deviates from the oracle by {worst:e}");
    }
}
