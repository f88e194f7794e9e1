//! Derived quantities: late-time saturation of ratio series, power-law and
//! linear least-squares fits, the detection-count threshold n*, the
//! hop-length data collapse, site profiles around the detector with their
//! empirical model, and the correlation ratio of occupation products.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::detector::DetectorPolicy;
use crate::engine::{ratio_series, RatioSeries, RecordSpec, RunCache, RunResult, RATIO_GUARD};
use crate::error::{Error, Result};

/// Fraction of a series regarded as "late time" when estimating saturation.
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.2;

/// Relative spread over the saturation window above which the estimate is
/// flagged as not yet stationary.
pub const STATIONARITY_SPREAD: f64 = 0.05;

/// Number of grid points used for the collapse-quality overlap grid.
pub const COLLAPSE_GRID_POINTS: usize = 101;

/// Late-time saturation estimate of a ratio series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatEstimate {
    /// Mean of the series over the window.
    pub value: f64,
    /// First and last time of the window.
    pub window: (u64, u64),
    /// (max - min) / mean over the window.
    pub spread: f64,
    /// Set when `spread` exceeds [`STATIONARITY_SPREAD`]: the series was
    /// still visibly moving where it was averaged.
    pub stationarity_warning: bool,
}

/// Ordinary least-squares fit summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Mean of the final `window_fraction` of the recorded series, with a
/// spread diagnostic.
pub fn saturation(series: &RatioSeries, window_fraction: f64) -> Result<SatEstimate> {
    if series.is_empty() {
        return Err(Error::EmptySeries(
            "saturation of an empty ratio series".into(),
        ));
    }
    if !(window_fraction > 0.0 && window_fraction < 1.0) {
        return Err(Error::Domain(format!(
            "window fraction {window_fraction} must lie in (0, 1)"
        )));
    }
    let k = series.len();
    let start = (((k as f64) * (1.0 - window_fraction)).ceil() as usize).min(k - 1);
    let window = &series.values[start..];
    let value = window.iter().sum::<f64>() / window.len() as f64;
    let max = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = window.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = if value != 0.0 {
        (max - min) / value
    } else {
        0.0
    };
    Ok(SatEstimate {
        value,
        window: (series.times[start], series.times[k - 1]),
        spread,
        stationarity_warning: spread > STATIONARITY_SPREAD,
    })
}

fn ols(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < 3 {
        return Err(Error::DegenerateData(format!(
            "{} points; a fit with r^2 needs at least 3",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateData("all x values are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let r2 = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(FitResult {
        slope,
        intercept,
        r2,
    })
}

/// Least squares on `(log n, log sat)`; the returned slope is the negated
/// decay exponent.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<FitResult> {
    for &(x, y) in points {
        if x <= 0.0 || y <= 0.0 {
            return Err(Error::Domain(format!(
                "power-law fit needs positive data; got ({x}, {y})"
            )));
        }
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    ols(&logs)
}

/// Ordinary least squares in linear coordinates.
pub fn fit_linear(points: &[(f64, f64)]) -> Result<FitResult> {
    ols(points)
}

/// Hop length of a moving detector: a finite `s` or the infinite jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HopSpec {
    Finite(u32),
    Infinite,
}

impl HopSpec {
    pub fn policy(self, x_d: i64, n: u32) -> DetectorPolicy {
        match self {
            HopSpec::Finite(s) => DetectorPolicy::Moving { x_d, n, s },
            HopSpec::Infinite => DetectorPolicy::MovingIj { x_d, n },
        }
    }
}

impl std::fmt::Display for HopSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HopSpec::Finite(s) => write!(f, "{s}"),
            HopSpec::Infinite => write!(f, "IJ"),
        }
    }
}

impl std::str::FromStr for HopSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("ij") {
            return Ok(HopSpec::Infinite);
        }
        s.parse::<u32>()
            .map(HopSpec::Finite)
            .map_err(|_| Error::Domain(format!("hop length '{s}' is neither a number nor IJ")))
    }
}

/// Saturation of the occupation ratio `policy / free walk` at site `x`.
pub fn ratio_saturation(
    cache: &RunCache,
    policy: DetectorPolicy,
    x: i64,
    t_max: u64,
) -> Result<SatEstimate> {
    let spec = RecordSpec::sites([x]);
    let a = cache.get_or_run(policy, t_max, &spec)?;
    let b = cache.get_or_run(DetectorPolicy::None, t_max, &spec)?;
    saturation(&ratio_series(&a, &b, x)?, DEFAULT_WINDOW_FRACTION)
}

/// Largest `n <= n_max` whose ratio saturation at the detector's initial
/// site still reaches 1; 0 if none does.
pub fn nstar(cache: &RunCache, x_d: i64, s: u32, n_max: u32, t_max: u64) -> Result<u32> {
    let sats: Vec<(u32, f64)> = (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let policy = DetectorPolicy::Moving { x_d, n, s };
            Ok((n, ratio_saturation(cache, policy, x_d, t_max)?.value))
        })
        .collect::<Result<_>>()?;
    Ok(sats
        .iter()
        .filter(|(_, sat)| *sat >= 1.0)
        .map(|(n, _)| *n)
        .max()
        .unwrap_or(0))
}

/// One row of a saturation sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub x_d: i64,
    pub n: u32,
    pub s: HopSpec,
    pub sat: SatEstimate,
}

/// Ratio saturations over a parameter grid, in (x_d, n, s) order.
pub fn sweep_saturations(
    cache: &RunCache,
    x_ds: &[i64],
    ns: &[u32],
    ss: &[HopSpec],
    t_max: u64,
) -> Result<Vec<SweepRow>> {
    let mut grid = Vec::new();
    for &x_d in x_ds {
        for &n in ns {
            for &s in ss {
                grid.push((x_d, n, s));
            }
        }
    }
    grid.into_par_iter()
        .map(|(x_d, n, s)| {
            let sat = ratio_saturation(cache, s.policy(x_d, n), x_d, t_max)?;
            Ok(SweepRow { x_d, n, s, sat })
        })
        .collect()
}

/// Saturation-versus-hop curves keyed by detections per epoch `n`; each
/// curve is a list of `(s, saturation)` points.
pub type CurveFamily = BTreeMap<u32, Vec<(f64, f64)>>;

/// Anchors of one curve in the hop-length collapse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollapseAnchor {
    /// Large-hop asymptote of the saturation curve.
    pub f: f64,
    /// Hop length at which the curve most exceeds that asymptote.
    pub s_max: f64,
}

/// Scaling transform for the family of saturation-versus-hop curves:
/// `x' = (s - s_max(n)) * n^-gamma`, `y' = (sat - F(n)) * n^+delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapsePlan {
    pub gamma: f64,
    pub delta: f64,
    pub anchors: BTreeMap<u32, CollapseAnchor>,
}

impl CollapsePlan {
    /// Estimate anchors from the curves themselves: `F(n)` is the
    /// saturation at the largest simulated hop (asymptote proxy) and
    /// `s_max(n)` the hop with the largest excess `sat - F(n)` (the bump
    /// whose position the rescaling is meant to align).
    pub fn estimate(curves: &CurveFamily, gamma: f64, delta: f64) -> Result<Self> {
        let mut anchors = BTreeMap::new();
        for (&n, curve) in curves {
            if curve.is_empty() {
                return Err(Error::EmptySeries(format!("curve for n = {n} is empty")));
            }
            let f = curve
                .iter()
                .cloned()
                .max_by(|a, b| a.0.total_cmp(&b.0))
                .unwrap()
                .1;
            let s_max = curve
                .iter()
                .cloned()
                .max_by(|a, b| (a.1 - f).total_cmp(&(b.1 - f)))
                .unwrap()
                .0;
            anchors.insert(n, CollapseAnchor { f, s_max });
        }
        Ok(Self {
            gamma,
            delta,
            anchors,
        })
    }

    /// The transform with `gamma = delta = 0` and zero anchors leaves every
    /// curve unchanged.
    pub fn identity(ns: impl IntoIterator<Item = u32>) -> Self {
        Self {
            gamma: 0.0,
            delta: 0.0,
            anchors: ns
                .into_iter()
                .map(|n| (n, CollapseAnchor { f: 0.0, s_max: 0.0 }))
                .collect(),
        }
    }
}

/// Apply a collapse plan to the curves and score how well the transformed
/// curves agree.
///
/// Quality is the mean, over a shared grid spanning the overlap of the
/// transformed x' ranges, of the across-curve standard deviation of
/// linearly interpolated y', divided by the overall y' range so the score
/// is invariant under rescaling of the y' axis. Lower is better; identical
/// transformed curves score 0.
pub fn collapse(curves: &CurveFamily, plan: &CollapsePlan) -> Result<(CurveFamily, f64)> {
    if plan.gamma < 0.0 || plan.delta < 0.0 {
        return Err(Error::Domain(
            "collapse exponents must be nonnegative".into(),
        ));
    }
    if curves.is_empty() {
        return Err(Error::EmptySeries("no curves to collapse".into()));
    }
    let mut transformed = BTreeMap::new();
    for (&n, curve) in curves {
        if curve.len() < 3 {
            return Err(Error::DegenerateData(format!(
                "curve for n = {n} has {} points; need at least 3",
                curve.len()
            )));
        }
        let anchor = plan
            .anchors
            .get(&n)
            .ok_or_else(|| Error::Domain(format!("plan has no anchors for n = {n}")))?;
        let nf = f64::from(n);
        let mut points: Vec<(f64, f64)> = curve
            .iter()
            .map(|&(s, sat)| {
                (
                    (s - anchor.s_max) * nf.powf(-plan.gamma),
                    (sat - anchor.f) * nf.powf(plan.delta),
                )
            })
            .collect();
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points[0].0 == points[points.len() - 1].0 {
            return Err(Error::Domain(format!(
                "curve for n = {n} maps to a degenerate x' range"
            )));
        }
        transformed.insert(n, points);
    }

    let lo = transformed
        .values()
        .map(|c| c[0].0)
        .fold(f64::NEG_INFINITY, f64::max);
    let hi = transformed
        .values()
        .map(|c| c[c.len() - 1].0)
        .fold(f64::INFINITY, f64::min);
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Err(Error::Domain(
            "transformed curves share no x' overlap to compare on".into(),
        ));
    }

    let mut mean_std = 0.0;
    for i in 0..COLLAPSE_GRID_POINTS {
        let x = lo + (hi - lo) * i as f64 / (COLLAPSE_GRID_POINTS - 1) as f64;
        let ys: Vec<f64> = transformed.values().map(|c| interpolate(c, x)).collect();
        // exact zero for identical values (the mean of k equal doubles can
        // round, which would leave a spurious ~1e-18 variance)
        if ys.iter().any(|y| *y != ys[0]) {
            let mean = ys.iter().sum::<f64>() / ys.len() as f64;
            let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / ys.len() as f64;
            mean_std += var.sqrt();
        }
    }
    mean_std /= COLLAPSE_GRID_POINTS as f64;

    let y_min = transformed
        .values()
        .flatten()
        .map(|p| p.1)
        .fold(f64::INFINITY, f64::min);
    let y_max = transformed
        .values()
        .flatten()
        .map(|p| p.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let quality = if y_max > y_min {
        mean_std / (y_max - y_min)
    } else {
        0.0
    };
    Ok((transformed, quality))
}

/// Linear interpolation on a curve sorted by x; clamps outside the range
/// (the quality grid never queries there).
fn interpolate(points: &[(f64, f64)], x: f64) -> f64 {
    match points.binary_search_by(|p| p.0.total_cmp(&x)) {
        Ok(i) => points[i].1,
        Err(0) => points[0].1,
        Err(i) if i == points.len() => points[points.len() - 1].1,
        Err(i) => {
            let (x0, y0) = points[i - 1];
            let (x1, y1) = points[i];
            y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        }
    }
}

/// Occupation ratio `mdqw / iw` around the detector's initial site at one
/// time: `(r, f_ns(x_d + r) / f_inf(x_d + r))` for `r` in the range, over
/// parity-matched sites with structurally nonzero denominator.
pub fn r_profile(
    mdqw: &RunResult,
    iw: &RunResult,
    t: u64,
    r_range: std::ops::RangeInclusive<i64>,
) -> Result<Vec<(i64, f64)>> {
    let x_d = mdqw.detector_site()?;
    let fm = mdqw.snapshot(t)?;
    let fi = iw.snapshot(t)?;
    let mut out = Vec::new();
    for r in r_range {
        let x = x_d + r;
        if x.abs() > mdqw.half_width || x.abs() > iw.half_width {
            continue;
        }
        if (x + t as i64) % 2 != 0 {
            continue;
        }
        let denom = fi[(x + iw.half_width) as usize];
        if denom < RATIO_GUARD {
            continue;
        }
        out.push((r, fm[(x + mdqw.half_width) as usize] / denom));
    }
    Ok(out)
}

/// Parameters of the empirical profile model
/// `A + B r^nu sin(r^beta) exp(-r^2 / D)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RProfileModelParams {
    pub a: f64,
    pub b: f64,
    pub nu: f64,
    pub beta: f64,
    pub d: f64,
}

/// Measured model parameters for selected (detections per epoch, hop
/// length) pairs, all at initial detector site 10.
pub const MODEL_PARAMS: [((u32, u32), RProfileModelParams); 9] = [
    (
        (2, 1),
        RProfileModelParams {
            a: 1.05,
            b: 0.5,
            nu: 0.2,
            beta: 0.456,
            d: 3e8,
        },
    ),
    (
        (2, 15),
        RProfileModelParams {
            a: 1.05,
            b: 0.06,
            nu: 0.2,
            beta: 0.4,
            d: 3e7,
        },
    ),
    (
        (2, 30),
        RProfileModelParams {
            a: 1.05,
            b: 0.06,
            nu: 0.2,
            beta: 0.4,
            d: 3e8,
        },
    ),
    (
        (15, 1),
        RProfileModelParams {
            a: 1.7,
            b: 0.6,
            nu: 0.19,
            beta: 0.54,
            d: 5e5,
        },
    ),
    (
        (15, 15),
        RProfileModelParams {
            a: 1.7,
            b: 0.7,
            nu: 0.19,
            beta: 0.54,
            d: 7e4,
        },
    ),
    (
        (15, 30),
        RProfileModelParams {
            a: 1.7,
            b: 0.7,
            nu: 0.19,
            beta: 0.54,
            d: 6e4,
        },
    ),
    (
        (30, 1),
        RProfileModelParams {
            a: 1.7,
            b: 0.75,
            nu: 0.15,
            beta: 0.6,
            d: 3e5,
        },
    ),
    (
        (30, 15),
        RProfileModelParams {
            a: 1.7,
            b: 0.86,
            nu: 0.15,
            beta: 0.598,
            d: 2e5,
        },
    ),
    (
        (30, 30),
        RProfileModelParams {
            a: 1.7,
            b: 0.86,
            nu: 0.15,
            beta: 0.598,
            d: 2e5,
        },
    ),
];

/// Model parameters for `(n, s)`, if tabulated.
pub fn model_params_for(n: u32, s: u32) -> Option<RProfileModelParams> {
    MODEL_PARAMS
        .iter()
        .find(|((pn, ps), _)| *pn == n && *ps == s)
        .map(|(_, p)| *p)
}

/// The profile model, defined for `r >= 0` only (fractional powers of
/// negative `r` have no real value).
pub fn model_r_profile(r: f64, p: &RProfileModelParams) -> Result<f64> {
    if r < 0.0 {
        return Err(Error::Domain(format!(
            "model is defined for r >= 0; got {r}"
        )));
    }
    if p.d <= 0.0 {
        return Err(Error::Domain(format!(
            "model scale D = {} must be positive",
            p.d
        )));
    }
    Ok(p.a + p.b * r.powf(p.nu) * (r.powf(p.beta)).sin() * (-r * r / p.d).exp())
}

/// Mean squared difference between a measured profile and the model over
/// the profile's `r >= 0` points. Reported as a diagnostic; the model is
/// approximate by construction and never asserted against.
pub fn profile_model_residual(profile: &[(i64, f64)], params: &RProfileModelParams) -> Result<f64> {
    let right: Vec<&(i64, f64)> = profile.iter().filter(|(r, _)| *r >= 0).collect();
    if right.is_empty() {
        return Err(Error::EmptySeries("profile has no r >= 0 points".into()));
    }
    let mut sum = 0.0;
    for &&(r, v) in &right {
        sum += (v - model_r_profile(r as f64, params)?).powi(2);
    }
    Ok(sum / right.len() as f64)
}

/// Ratio of equal-time occupation products
/// `g(x_d + r) = f(x_d + r) * f(x_d)` between a detector run and the free
/// walk, over times where both free-walk factors are structurally nonzero.
pub fn correlation_ratio(mdqw: &RunResult, iw: &RunResult, r: i64) -> Result<RatioSeries> {
    let x_d = mdqw.detector_site()?;
    let x = x_d + r;
    let ma = mdqw.series(x)?;
    let mb = mdqw.series(x_d)?;
    let ia = iw.series(x)?;
    let ib = iw.series(x_d)?;
    if mdqw.t_max != iw.t_max {
        return Err(Error::Domain(format!(
            "runs have different lengths ({} vs {})",
            mdqw.t_max, iw.t_max
        )));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for t in 0..=mdqw.t_max {
        let ti = t as i64;
        // structural support of both free-walk factors: parity and light cone
        if (x_d + ti) % 2 != 0 || (x + ti) % 2 != 0 || ti < x_d.abs() || ti < x.abs() {
            continue;
        }
        let denom = ia[t as usize] * ib[t as usize];
        if denom < RATIO_GUARD {
            continue;
        }
        times.push(t);
        values.push(ma[t as usize] * mb[t as usize] / denom);
    }
    Ok(RatioSeries {
        site: x,
        times,
        values,
    })
}
