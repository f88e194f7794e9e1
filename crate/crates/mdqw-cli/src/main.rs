//! Command-line front end for the moving-detector walk simulator.
//!
//! Seven subcommands cover the study workflow: `run` (snapshots, series,
//! events), `ratio` (occupation ratio to the free walk over time), `sweep`
//! (saturation grids), `collapse` (hop-curve rescaling or inverse-square
//! rescaling across detector distances), `rprofile` (ratio profiles around
//! the detector), `correlate` (occupation-product correlation ratios), and
//! `verify` (built-in self checks).
//!
//! Every simulation is deterministic, so identical command lines produce
//! byte-identical output files. Exit codes: 0 success, 1 verification
//! failure, 2 usage or configuration error, 3 runtime error.

mod config;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{build_policy, parse_hop_list, parse_int_list, parse_u32_list, FileConfig};
use mdqw_core::analysis::{
    collapse, correlation_ratio, model_params_for, r_profile, ratio_saturation, sweep_saturations,
    CollapsePlan, HopSpec,
};
use mdqw_core::engine::{ratio_series, run, RecordSpec, RunCache};
use mdqw_core::output::{self, Format, Table};
use mdqw_core::DetectorPolicy;

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

/// A diagnosed failure carrying its exit code.
enum Failure {
    /// Bad flags or configuration: exit 2.
    Usage(String),
    /// The simulation itself failed: exit 3.
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<mdqw_core::Error> for Failure {
    fn from(e: mdqw_core::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

/// Shorthand: a `String` error at this layer is always a usage error.
fn usage<T>(r: Result<T, String>) -> Result<T, Failure> {
    r.map_err(Failure::Usage)
}

type CmdResult = Result<ExitCode, Failure>;

/// Deterministic simulator and analysis toolkit for the one-dimensional
/// Hadamard walk with a moving absorbing detector.
#[derive(Parser)]
#[command(name = "mdqw", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one policy and write snapshot, series, event, and
    /// absorbed-mass tables.
    Run(RunArgs),
    /// Occupation ratio of a policy to the free walk at one site, over time.
    Ratio(RatioArgs),
    /// Late-time ratio saturations over an (x_D, n, s) parameter grid.
    Sweep(SweepArgs),
    /// Saturation-versus-hop curves and their rescaled data collapse.
    Collapse(CollapseArgs),
    /// Occupation-ratio profile around the detector at a fixed time.
    Rprofile(RprofileArgs),
    /// Equal-time occupation-product correlation ratios at fixed offsets.
    Correlate(CorrelateArgs),
    /// Run the built-in verification suites.
    Verify,
}

#[derive(Args)]
struct CommonArgs {
    /// Plain-text key=value configuration file; explicit flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<std::path::PathBuf>,
    /// Number of walk steps to simulate.
    #[arg(short = 'T', long = "T", value_name = "STEPS")]
    t_max: Option<u64>,
    /// Output path stem; each file appends a suffix and an extension.
    #[arg(long, value_name = "STEM")]
    out: Option<String>,
    /// Output file format: csv or json.
    #[arg(long, value_name = "FMT")]
    format: Option<String>,
}

#[derive(Args)]
struct PolicyArgs {
    /// Detector policy: iw, fixed, moving, ij, or quench.
    #[arg(long, value_name = "MODE")]
    mode: Option<String>,
    /// Initial detector site x_D (positive).
    #[arg(long, value_name = "SITE")]
    xd: Option<i64>,
    /// Detections per epoch before the detector hops.
    #[arg(long, value_name = "COUNT")]
    n: Option<u32>,
    /// Hop length, or the literal IJ for the infinite jump.
    #[arg(long, value_name = "HOP")]
    s: Option<String>,
    /// Step after which a quench detector switches off.
    #[arg(long = "t-off", value_name = "STEP")]
    t_off: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    policy: PolicyArgs,
    /// Snapshot times, a comma list with a..b ranges (defaults to T).
    #[arg(long, value_name = "TIMES")]
    snapshot: Option<String>,
    /// Sites whose occupation time series to record (comma list).
    #[arg(long, value_name = "SITES")]
    site: Option<String>,
    /// Record the detection event log.
    #[arg(long)]
    events: bool,
    /// Record the cumulative absorbed-mass series.
    #[arg(long)]
    absorbed: bool,
}

#[derive(Args)]
struct RatioArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    policy: PolicyArgs,
    /// Site of the ratio series (defaults to the detector's initial site).
    #[arg(long, value_name = "SITE")]
    site: Option<i64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Initial detector sites (comma list with a..b ranges).
    #[arg(long = "xd-list", value_name = "LIST")]
    xd_list: Option<String>,
    /// Detections-per-epoch values.
    #[arg(long = "n-list", value_name = "LIST")]
    n_list: Option<String>,
    /// Hop lengths; IJ denotes the infinite jump.
    #[arg(long = "s-list", value_name = "LIST")]
    s_list: Option<String>,
}

#[derive(Args)]
struct CollapseArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Detections-per-epoch values, one curve each.
    #[arg(long = "n-list", value_name = "LIST")]
    n_list: Option<String>,
    /// Hop lengths of each curve (finite values only).
    #[arg(long = "s-list", value_name = "LIST")]
    s_list: Option<String>,
    /// Initial detector site.
    #[arg(long, value_name = "SITE")]
    xd: Option<i64>,
    /// Horizontal rescaling exponent; 0 with --delta 0 leaves curves as-is.
    #[arg(long, value_name = "EXP")]
    gamma: Option<f64>,
    /// Vertical rescaling exponent.
    #[arg(long, value_name = "EXP")]
    delta: Option<f64>,
    /// Rescale saturations by n²/x_D² across detector sites instead of
    /// collapsing hop curves.
    #[arg(long = "inverse-square")]
    inverse_square: bool,
}

#[derive(Args)]
struct RprofileArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Detections-per-epoch values, one profile per (n, s) pair.
    #[arg(long = "n-list", value_name = "LIST")]
    n_list: Option<String>,
    /// Hop lengths; IJ denotes the infinite jump.
    #[arg(long = "s-list", value_name = "LIST")]
    s_list: Option<String>,
    /// Initial detector site.
    #[arg(long, value_name = "SITE")]
    xd: Option<i64>,
    /// Time of the profile snapshot (also the run horizon).
    #[arg(long, value_name = "TIME")]
    t: Option<u64>,
    /// Smallest offset from the detector site.
    #[arg(long = "r-min", value_name = "R", allow_hyphen_values = true)]
    r_min: Option<i64>,
    /// Largest offset from the detector site.
    #[arg(long = "r-max", value_name = "R", allow_hyphen_values = true)]
    r_max: Option<i64>,
}

#[derive(Args)]
struct CorrelateArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    policy: PolicyArgs,
    /// Offsets r from the detector site, one series per value.
    #[arg(long = "r-list", value_name = "LIST", allow_hyphen_values = true)]
    r_list: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_workers() {
        eprintln!("mdqw: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Ratio(args) => cmd_ratio(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Collapse(args) => cmd_collapse(args),
        Command::Rprofile(args) => cmd_rprofile(args),
        Command::Correlate(args) => cmd_correlate(args),
        Command::Verify => cmd_verify(),
    };
    match result {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("mdqw: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}

/// Honor the worker-count environment variable before any parallel region
/// spins up.
fn configure_workers() -> Result<(), String> {
    let Ok(text) = std::env::var("MDQW_WORKERS") else {
        return Ok(());
    };
    let workers: usize = text
        .parse()
        .ok()
        .filter(|w| *w >= 1)
        .ok_or_else(|| format!("MDQW_WORKERS must be a positive integer, got '{text}'"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| format!("cannot configure {workers} workers: {e}"))
}

/// Resolve the flags shared by every command against the config file.
fn resolve_common(
    common: &CommonArgs,
    default_t: u64,
) -> Result<(FileConfig, u64, String, Format), Failure> {
    let cfg = usage(FileConfig::load(common.config.as_deref()))?;
    let t_max = usage(cfg.merge(common.t_max, "T"))?.unwrap_or(default_t);
    let out = cfg
        .merge_str(common.out.clone(), "out")
        .unwrap_or_else(|| "mdqw".into());
    let format = match cfg.merge_str(common.format.clone(), "format") {
        None => Format::Csv,
        Some(text) => text
            .parse()
            .map_err(|e: mdqw_core::Error| Failure::Usage(e.to_string()))?,
    };
    Ok((cfg, t_max, out, format))
}

fn resolve_policy(policy: &PolicyArgs, cfg: &FileConfig) -> Result<DetectorPolicy, Failure> {
    let mode = cfg
        .merge_str(policy.mode.clone(), "mode")
        .unwrap_or_else(|| "iw".into());
    let xd = usage(cfg.merge(policy.xd, "xd"))?;
    let n = usage(cfg.merge(policy.n, "n"))?;
    let s = match cfg.merge_str(policy.s.clone(), "s") {
        None => None,
        Some(text) => Some(
            text.parse::<HopSpec>()
                .map_err(|e| Failure::Usage(e.to_string()))?,
        ),
    };
    let t_off = usage(cfg.merge(policy.t_off, "t-off"))?;
    usage(build_policy(&mode, xd, n, s, t_off))
}

fn write_table(out: &str, suffix: &str, table: &Table, format: Format) -> Result<(), Failure> {
    let path = format!("{out}{suffix}.{}", format.extension());
    std::fs::write(&path, table.render(format))
        .map_err(|e| Failure::Runtime(format!("cannot write {path}: {e}")))?;
    println!("wrote {path}");
    Ok(())
}

fn parse_times(text: &str, t_max: u64) -> Result<Vec<u64>, String> {
    let mut times = Vec::new();
    for v in parse_int_list(text)? {
        let t = u64::try_from(v).map_err(|_| format!("time {v} is negative"))?;
        if t > t_max {
            return Err(format!("snapshot time {t} is beyond T = {t_max}"));
        }
        times.push(t);
    }
    Ok(times)
}

fn cmd_run(args: &RunArgs) -> CmdResult {
    let (cfg, t_max, out, format) = resolve_common(&args.common, 1000)?;
    let policy = resolve_policy(&args.policy, &cfg)?;
    let events = usage(cfg.merge_switch(args.events, "events"))?;
    let absorbed = usage(cfg.merge_switch(args.absorbed, "absorbed"))?;
    let sites = match cfg.merge_str(args.site.clone(), "site") {
        Some(text) => usage(parse_int_list(&text))?,
        None => Vec::new(),
    };
    let mut snapshots = match cfg.merge_str(args.snapshot.clone(), "snapshot") {
        Some(text) => usage(parse_times(&text, t_max))?,
        None => Vec::new(),
    };
    if snapshots.is_empty() && sites.is_empty() && !events && !absorbed {
        snapshots.push(t_max);
    }
    for &x in &sites {
        if x.abs() > t_max as i64 + 1 {
            return Err(Failure::Usage(format!(
                "site {x} is outside the lattice for T = {t_max}"
            )));
        }
    }

    let mut spec =
        RecordSpec::snapshots(snapshots.iter().copied()).with_sites(sites.iter().copied());
    if events {
        spec = spec.with_events();
    }
    if absorbed {
        spec = spec.with_absorbed_series();
    }
    let result = run(policy, t_max, &spec)?;
    for &t in &snapshots {
        write_table(
            &out,
            &format!("_t{t}"),
            &output::snapshot_table(&result, t)?,
            format,
        )?;
    }
    for &x in &sites {
        write_table(
            &out,
            &format!("_x{x}"),
            &output::series_table(&result, x)?,
            format,
        )?;
    }
    if events {
        write_table(&out, "_events", &output::events_table(&result), format)?;
    }
    if absorbed {
        write_table(&out, "_absorbed", &output::absorbed_table(&result)?, format)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_ratio(args: &RatioArgs) -> CmdResult {
    let (cfg, t_max, out, format) = resolve_common(&args.common, 5000)?;
    let policy = resolve_policy(&args.policy, &cfg)?;
    let site = match usage(cfg.merge(args.site, "site"))? {
        Some(x) => x,
        None => policy.initial_position().ok_or_else(|| {
            Failure::Usage("ratio needs --site when the policy has no detector".into())
        })?,
    };
    let spec = RecordSpec::sites([site]);
    let result = run(policy, t_max, &spec)?;
    let reference = if policy == DetectorPolicy::None {
        result.clone()
    } else {
        run(DetectorPolicy::None, t_max, &spec)?
    };
    let series = ratio_series(&result, &reference, site)?;
    let table = output::ratio_table(&series, &policy, t_max);
    write_table(&out, &format!("_ratio_x{site}"), &table, format)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: &SweepArgs) -> CmdResult {
    let (cfg, t_max, out, format) = resolve_common(&args.common, 5000)?;
    let xd_list = usage(parse_int_list(
        &cfg.merge_str(args.xd_list.clone(), "xd-list")
            .unwrap_or_else(|| "10".into()),
    ))?;
    let n_list = usage(parse_u32_list(
        &cfg.merge_str(args.n_list.clone(), "n-list")
            .unwrap_or_else(|| "1..40".into()),
    ))?;
    let s_list = usage(parse_hop_list(
        &cfg.merge_str(args.s_list.clone(), "s-list")
            .unwrap_or_else(|| "1".into()),
    ))?;
    if xd_list.is_empty() || n_list.is_empty() || s_list.is_empty() {
        return Err(Failure::Usage("sweep grid is empty".into()));
    }
    validate_grid(&xd_list, &n_list, &s_list)?;
    let cache = RunCache::new();
    let rows = sweep_saturations(&cache, &xd_list, &n_list, &s_list, t_max)?;
    write_table(&out, "_sweep", &output::sweep_table(&rows, t_max), format)?;
    Ok(ExitCode::SUCCESS)
}

fn validate_grid(xd_list: &[i64], n_list: &[u32], s_list: &[HopSpec]) -> Result<(), Failure> {
    if xd_list.iter().any(|x| *x < 1) {
        return Err(Failure::Usage("x_D must be positive".into()));
    }
    if n_list.iter().any(|n| *n < 1) {
        return Err(Failure::Usage("n must be at least 1".into()));
    }
    if s_list.iter().any(|s| matches!(s, HopSpec::Finite(0))) {
        return Err(Failure::Usage("s must be at least 1".into()));
    }
    Ok(())
}

fn cmd_collapse(args: &CollapseArgs) -> CmdResult {
    let (cfg, t_max, out, format) = resolve_common(&args.common, 5000)?;
    let n_list = usage(parse_u32_list(
        &cfg.merge_str(args.n_list.clone(), "n-list")
            .unwrap_or_else(|| "2,3,6,10,15,30".into()),
    ))?;
    let inverse_square = usage(cfg.merge_switch(args.inverse_square, "inverse-square"))?;
    let cache = RunCache::new();

    if inverse_square {
        let xd_list = usage(parse_int_list(
            &cfg.merge_str(None, "xd-list")
                .unwrap_or_else(|| "2,6,10,14".into()),
        ))?;
        validate_grid(&xd_list, &n_list, &[])?;
        if n_list.is_empty() || xd_list.is_empty() {
            return Err(Failure::Usage("rescaling grid is empty".into()));
        }
        for &x_d in &xd_list {
            let mut table = Table::new(
                vec![
                    ("x_d".into(), x_d.to_string()),
                    ("T".into(), t_max.to_string()),
                    ("s".into(), "1".into()),
                ],
                ["n", "sat", "rescaled"],
            );
            for &n in &n_list {
                let policy = DetectorPolicy::Moving { x_d, n, s: 1 };
                let sat = ratio_saturation(&cache, policy, x_d, t_max)?.value;
                let rescaled = sat * f64::from(n * n) / (x_d * x_d) as f64;
                table.push(vec![
                    output::Cell::UInt(u64::from(n)),
                    output::Cell::Float(sat),
                    output::Cell::Float(rescaled),
                ]);
            }
            write_table(&out, &format!("_rescaled_xd{x_d}"), &table, format)?;
        }
        return Ok(ExitCode::SUCCESS);
    }

    let hops = usage(parse_hop_list(
        &cfg.merge_str(args.s_list.clone(), "s-list")
            .unwrap_or_else(|| "1..50,200".into()),
    ))?;
    let mut s_list = Vec::new();
    for hop in &hops {
        match hop {
            HopSpec::Finite(s) => s_list.push(*s),
            HopSpec::Infinite => {
                return Err(Failure::Usage(
                    "collapse needs finite hop lengths (use a large value as an IJ proxy)".into(),
                ))
            }
        }
    }
    let xd = usage(cfg.merge(args.xd, "xd"))?.unwrap_or(10);
    let gamma = usage(cfg.merge(args.gamma, "gamma"))?.unwrap_or(0.6);
    let delta = usage(cfg.merge(args.delta, "delta"))?.unwrap_or(1.2);
    if n_list.is_empty() || s_list.is_empty() {
        return Err(Failure::Usage("collapse grid is empty".into()));
    }
    validate_grid(&[xd], &n_list, &hops)?;

    let mut curves = std::collections::BTreeMap::new();
    for &n in &n_list {
        let mut curve = Vec::new();
        for &s in &s_list {
            let policy = DetectorPolicy::Moving { x_d: xd, n, s };
            let sat = ratio_saturation(&cache, policy, xd, t_max)?.value;
            curve.push((f64::from(s), sat));
        }
        curves.insert(n, curve);
    }
    for (&n, curve) in &curves {
        write_table(
            &out,
            &format!("_curve_n{n}"),
            &output::curve_table(n, curve, t_max),
            format,
        )?;
    }
    let plan = if gamma == 0.0 && delta == 0.0 {
        CollapsePlan::identity(n_list.iter().copied())
    } else {
        CollapsePlan::estimate(&curves, gamma, delta)?
    };
    let (transformed, quality) = collapse(&curves, &plan)?;
    for (&n, curve) in &transformed {
        let table = output::collapsed_table(n, curve, gamma, delta, quality);
        write_table(&out, &format!("_collapsed_n{n}"), &table, format)?;
    }
    println!("collapse quality {quality} (mean cross-curve spread / range; lower is better)");
    Ok(ExitCode::SUCCESS)
}

fn cmd_rprofile(args: &RprofileArgs) -> CmdResult {
    let (cfg, _, out, format) = resolve_common(&args.common, 1000)?;
    let t = usage(cfg.merge(args.t, "t"))?.unwrap_or(1000);
    let n_list = usage(parse_u32_list(
        &cfg.merge_str(args.n_list.clone(), "n-list")
            .unwrap_or_else(|| "2,15,30".into()),
    ))?;
    let hops = usage(parse_hop_list(
        &cfg.merge_str(args.s_list.clone(), "s-list")
            .unwrap_or_else(|| "1,15,30".into()),
    ))?;
    let xd = usage(cfg.merge(args.xd, "xd"))?.unwrap_or(10);
    let r_min = usage(cfg.merge(args.r_min, "r-min"))?.unwrap_or(-200);
    let r_max = usage(cfg.merge(args.r_max, "r-max"))?.unwrap_or(200);
    if r_min > r_max {
        return Err(Failure::Usage(format!(
            "empty offset range {r_min}..{r_max}"
        )));
    }
    if n_list.is_empty() || hops.is_empty() {
        return Err(Failure::Usage("profile grid is empty".into()));
    }
    validate_grid(&[xd], &n_list, &hops)?;

    let spec = RecordSpec::snapshots([t]);
    let iw = run(DetectorPolicy::None, t, &spec)?;
    for &n in &n_list {
        for &hop in &hops {
            let policy = hop.policy(xd, n);
            let result = run(policy, t, &spec)?;
            let profile = r_profile(&result, &iw, t, r_min..=r_max)?;
            let model = match hop {
                HopSpec::Finite(s) => model_params_for(n, s),
                HopSpec::Infinite => None,
            };
            let table = output::profile_table(&profile, &policy, t, model.as_ref())?;
            let suffix = match hop {
                HopSpec::Finite(s) => format!("_{n}D{s}S"),
                HopSpec::Infinite => format!("_{n}DIJ"),
            };
            write_table(&out, &suffix, &table, format)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_correlate(args: &CorrelateArgs) -> CmdResult {
    let (cfg, t_max, out, format) = resolve_common(&args.common, 5000)?;
    let policy = resolve_policy(&args.policy, &cfg)?;
    let Some(x_d) = policy.initial_position() else {
        return Err(Failure::Usage(
            "correlate needs a detector policy (--mode moving, ij, fixed, or quench)".into(),
        ));
    };
    let r_list = usage(parse_int_list(
        &cfg.merge_str(args.r_list.clone(), "r-list")
            .unwrap_or_else(|| "-20,-10,10,20,40".into()),
    ))?;
    if r_list.is_empty() {
        return Err(Failure::Usage("offset list is empty".into()));
    }
    let mut sites = vec![x_d];
    sites.extend(r_list.iter().map(|r| x_d + r));
    for &x in &sites {
        if x.abs() > t_max as i64 + 1 {
            return Err(Failure::Usage(format!(
                "offset site {x} is outside the lattice for T = {t_max}"
            )));
        }
    }
    let spec = RecordSpec::sites(sites);
    let mdqw = run(policy, t_max, &spec)?;
    let iw = run(DetectorPolicy::None, t_max, &spec)?;
    for &r in &r_list {
        let series = correlation_ratio(&mdqw, &iw, r)?;
        let table = output::correlation_table(&series, &policy, t_max, r);
        write_table(&out, &format!("_corr_r{r}"), &table, format)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify() -> CmdResult {
    let checks = mdqw_core::verify::run_all()?;
    let mut all_passed = true;
    for check in &checks {
        let tag = if check.passed { "PASS" } else { "FAIL" };
        println!("{}: {tag} — {}", check.name, check.detail);
        all_passed &= check.passed;
    }
    if all_passed {
        println!("all {} checks passed", checks.len());
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(EXIT_CHECK_FAILED))
    }
}
