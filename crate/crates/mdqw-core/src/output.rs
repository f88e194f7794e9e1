//! Plot-ready tables and their CSV/JSON renderings.
//!
//! Every table carries a provenance block (the full parameter set that
//! produced it), a fixed column order, and typed cells. Rendering is
//! deterministic: equal tables produce byte-identical text, so output files
//! diff cleanly across reruns.

use serde_json::{json, Value};

use crate::analysis::{RProfileModelParams, SweepRow};
use crate::detector::DetectorPolicy;
use crate::engine::{RatioSeries, RunResult};
use crate::error::{Error, Result};

/// One value in a table row.
///
/// `Float` renders as the shortest decimal that round-trips the double;
/// `Sci` renders in 17-significant-digit scientific notation, used for
/// detection probabilities whose magnitudes span many decades.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    UInt(u64),
    Float(f64),
    Sci(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => format!("{v}"),
            Cell::UInt(v) => format!("{v}"),
            Cell::Float(v) => format!("{v}"),
            Cell::Sci(v) => format!("{v:.16e}"),
            Cell::Text(v) => v.clone(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::UInt(v) => json!(v),
            Cell::Float(v) | Cell::Sci(v) => {
                serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number)
            }
            Cell::Text(v) => json!(v),
        }
    }
}

/// A provenance block plus rows under named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Ordered `key = value` pairs describing how the data was produced.
    pub provenance: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

/// Output file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Domain(format!(
                "unknown output format '{other}' (expected csv or json)"
            ))),
        }
    }
}

impl Table {
    pub fn new(
        provenance: Vec<(String, String)>,
        columns: impl IntoIterator<Item = &'static str>,
    ) -> Self {
        Self {
            provenance,
            columns: columns.into_iter().map(str::to_owned).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// `# key=value` header lines, a column-name row, then comma-separated
    /// data rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.provenance {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// The same content as an object `{provenance, columns, rows}`.
    pub fn to_json(&self) -> String {
        let provenance: serde_json::Map<String, Value> = self
            .provenance
            .iter()
            .map(|(k, v)| (k.clone(), json!(v)))
            .collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| Value::Array(row.iter().map(Cell::to_json).collect()))
            .collect();
        let doc = json!({
            "provenance": provenance,
            "columns": self.columns,
            "rows": rows,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("table serialization");
        text.push('\n');
        text
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// Base provenance shared by all tables derived from one run.
pub fn run_provenance(policy: &DetectorPolicy, t_max: u64) -> Vec<(String, String)> {
    vec![
        ("policy".into(), policy.to_string()),
        ("T".into(), t_max.to_string()),
    ]
}

/// Occupation snapshot at time `t`: columns `x, f` over `x in [-T, T]`.
pub fn snapshot_table(result: &RunResult, t: u64) -> Result<Table> {
    let snap = result.snapshot(t)?;
    let mut prov = run_provenance(&result.policy, result.t_max);
    prov.push(("t".into(), t.to_string()));
    let mut table = Table::new(prov, ["x", "f"]);
    for x in -(result.t_max as i64)..=(result.t_max as i64) {
        table.push(vec![
            Cell::Int(x),
            Cell::Float(snap[(x + result.half_width) as usize]),
        ]);
    }
    Ok(table)
}

/// Per-site occupation series: columns `t, f`.
pub fn series_table(result: &RunResult, x: i64) -> Result<Table> {
    let series = result.series(x)?;
    let mut prov = run_provenance(&result.policy, result.t_max);
    prov.push(("x".into(), x.to_string()));
    let mut table = Table::new(prov, ["t", "f"]);
    for (t, f) in series.iter().enumerate() {
        table.push(vec![Cell::UInt(t as u64), Cell::Float(*f)]);
    }
    Ok(table)
}

/// Detection events: columns `t, x, p` with probabilities in scientific
/// notation.
pub fn events_table(result: &RunResult) -> Table {
    let mut table = Table::new(
        run_provenance(&result.policy, result.t_max),
        ["t", "x", "p"],
    );
    for e in &result.events {
        table.push(vec![
            Cell::UInt(e.time),
            Cell::Int(e.position),
            Cell::Sci(e.probability),
        ]);
    }
    table
}

/// Cumulative absorbed mass: columns `t, d`.
pub fn absorbed_table(result: &RunResult) -> Result<Table> {
    if result.absorbed_series.is_empty() {
        return Err(Error::MissingRecord(
            "absorbed series was not recorded".into(),
        ));
    }
    let mut table = Table::new(run_provenance(&result.policy, result.t_max), ["t", "d"]);
    for (t, d) in result.absorbed_series.iter().enumerate() {
        table.push(vec![Cell::UInt(t as u64), Cell::Float(*d)]);
    }
    Ok(table)
}

/// Occupation-ratio series between two runs: columns `t, ratio`.
pub fn ratio_table(series: &RatioSeries, policy: &DetectorPolicy, t_max: u64) -> Table {
    let mut prov = run_provenance(policy, t_max);
    prov.push(("x".into(), series.site.to_string()));
    prov.push(("reference".into(), DetectorPolicy::None.to_string()));
    let mut table = Table::new(prov, ["t", "ratio"]);
    for (t, v) in series.times.iter().zip(&series.values) {
        table.push(vec![Cell::UInt(*t), Cell::Float(*v)]);
    }
    table
}

/// Saturation sweep: columns `x_d, n, s, sat, spread, warn`, rows already
/// sorted by the caller in (x_d, n, s) order. `warn` is 1 when the series
/// was still moving over the averaging window.
pub fn sweep_table(rows: &[SweepRow], t_max: u64) -> Table {
    let mut table = Table::new(
        vec![("T".into(), t_max.to_string())],
        ["x_d", "n", "s", "sat", "spread", "warn"],
    );
    for row in rows {
        table.push(vec![
            Cell::Int(row.x_d),
            Cell::UInt(row.n as u64),
            Cell::Text(row.s.to_string()),
            Cell::Float(row.sat.value),
            Cell::Float(row.sat.spread),
            Cell::Int(row.sat.stationarity_warning as i64),
        ]);
    }
    table
}

/// One saturation-versus-hop curve: columns `s, sat`.
pub fn curve_table(n: u32, curve: &[(f64, f64)], t_max: u64) -> Table {
    let mut table = Table::new(
        vec![("n".into(), n.to_string()), ("T".into(), t_max.to_string())],
        ["s", "sat"],
    );
    for &(s, sat) in curve {
        table.push(vec![Cell::Float(s), Cell::Float(sat)]);
    }
    table
}

/// One transformed collapse curve: columns `x_prime, y_prime`.
pub fn collapsed_table(
    n: u32,
    curve: &[(f64, f64)],
    gamma: f64,
    delta: f64,
    quality: f64,
) -> Table {
    let mut table = Table::new(
        vec![
            ("n".into(), n.to_string()),
            ("gamma".into(), gamma.to_string()),
            ("delta".into(), delta.to_string()),
            ("quality".into(), quality.to_string()),
        ],
        ["x_prime", "y_prime"],
    );
    for &(x, y) in curve {
        table.push(vec![Cell::Float(x), Cell::Float(y)]);
    }
    table
}

/// Site profile around the detector at one time: columns `r, ratio` plus a
/// `model` column when model parameters are supplied.
pub fn profile_table(
    profile: &[(i64, f64)],
    policy: &DetectorPolicy,
    t: u64,
    model: Option<&RProfileModelParams>,
) -> Result<Table> {
    let mut prov = run_provenance(policy, t);
    prov.push(("t".into(), t.to_string()));
    let mut table = match model {
        Some(_) => Table::new(prov, ["r", "ratio", "model"]),
        None => Table::new(prov, ["r", "ratio"]),
    };
    for &(r, v) in profile {
        let mut row = vec![Cell::Int(r), Cell::Float(v)];
        if let Some(p) = model {
            // the model is defined only on r >= 0; blank cells keep the
            // column grid rectangular
            row.push(if r >= 0 {
                Cell::Float(crate::analysis::model_r_profile(r as f64, p)?)
            } else {
                Cell::Text(String::new())
            });
        }
        table.push(row);
    }
    Ok(table)
}

/// Correlation-ratio series at offset `r`: columns `t, ratio`.
pub fn correlation_table(
    series: &RatioSeries,
    policy: &DetectorPolicy,
    t_max: u64,
    r: i64,
) -> Table {
    let mut prov = run_provenance(policy, t_max);
    prov.push(("r".into(), r.to_string()));
    let mut table = Table::new(prov, ["t", "ratio"]);
    for (t, v) in series.times.iter().zip(&series.values) {
        table.push(vec![Cell::UInt(*t), Cell::Float(*v)]);
    }
    table
}
