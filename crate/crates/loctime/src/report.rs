//! Report bundle written to the output directory.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::Formatter;
use serde_json::{json, Value};

use crate::error::RunError;

/// Shortest exact form of a float at 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// JSON formatter writing every float with 17 significant digits, so
/// values round-trip exactly and the output is byte-stable.
struct SeventeenDigits;

impl Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Pretty-prints with two-space indentation and 17-digit floats.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let pretty = PrettyFloats { inner: serde_json::ser::PrettyFormatter::with_indent(b"  ") };
    let mut ser = serde_json::Serializer::with_formatter(&mut out, pretty);
    value.serialize(&mut ser).expect("serializable report");
    out.push(b'\n');
    String::from_utf8(out).expect("utf-8 json")
}

struct PrettyFloats<'a> {
    inner: serde_json::ser::PrettyFormatter<'a>,
}

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.inner.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for PrettyFloats<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        SeventeenDigits.write_f64(w, value)
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        SeventeenDigits.write_f32(w, value)
    }

    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        end_object_key(),
        begin_object_value(),
        end_object_value(),
    );
}

/// One pass/fail claim with its target, estimate and tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub target: f64,
    pub estimate: f64,
    /// Standard error, for stochastic estimates.
    pub se: Option<f64>,
    /// Threshold used by `rule`.
    pub tolerance: f64,
    /// How `pass` was decided, e.g. `|z| <= tol` or `p > tol`.
    pub rule: &'static str,
    pub pass: bool,
    /// Set when a failure is explained rather than judged (pre-asymptotic).
    pub label: Option<&'static str>,
}

impl Check {
    /// `|estimate − target| ≤ tolerance`.
    pub fn exact(name: impl Into<String>, target: f64, estimate: f64, tolerance: f64) -> Self {
        let pass = (estimate - target).abs() <= tolerance;
        Check {
            name: name.into(),
            target,
            estimate,
            se: None,
            tolerance,
            rule: "|estimate - target| <= tol",
            pass,
            label: None,
        }
    }

    /// A violation measure that must not exceed `tolerance` (target 0).
    pub fn violation(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            target: 0.0,
            estimate: value,
            se: None,
            tolerance,
            rule: "estimate <= tol",
            pass: value <= tolerance,
            label: None,
        }
    }

    /// `|estimate − target| / se ≤ band`.
    pub fn z(name: impl Into<String>, target: f64, estimate: f64, se: f64, band: f64) -> Self {
        let z = loctime_core::stats::z_score(estimate, target, se);
        Check {
            name: name.into(),
            target,
            estimate,
            se: Some(se),
            tolerance: band,
            rule: "|z| <= tol",
            pass: z.abs() <= band,
            label: None,
        }
    }

    /// KS test: p-value above `alpha`. `estimate` holds the statistic and
    /// `target` its critical value.
    pub fn ks(name: impl Into<String>, ks: &loctime_core::stats::KsResult, alpha: f64) -> Self {
        Check {
            name: name.into(),
            target: ks.critical_value(alpha),
            estimate: ks.statistic,
            se: None,
            tolerance: alpha,
            rule: "ks p-value > tol (target = critical value)",
            pass: ks.passes(alpha),
            label: None,
        }
    }

    /// `estimate ≥ tolerance`.
    pub fn at_least(name: impl Into<String>, estimate: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            target: tolerance,
            estimate,
            se: None,
            tolerance,
            rule: "estimate >= tol",
            pass: estimate >= tolerance,
            label: None,
        }
    }

    /// Boolean property; estimate is 1 when it holds.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Check {
            name: name.into(),
            target: 1.0,
            estimate: if ok { 1.0 } else { 0.0 },
            se: None,
            tolerance: 0.0,
            rule: "property holds",
            pass: ok,
            label: None,
        }
    }

    pub fn labelled(mut self, label: Option<&'static str>) -> Self {
        self.label = label;
        self
    }
}

/// A CSV table with a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row.into_iter().map(|c| c.render()).collect());
    }

    /// `rows × cols` matrix with a leading row-label column.
    pub fn matrix(name: impl Into<String>, labels: &[String], values: impl Fn(usize, usize) -> f64) -> Self {
        let mut header = vec!["state".to_string()];
        header.extend(labels.iter().cloned());
        let rows = labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let mut row = vec![l.clone()];
                row.extend((0..labels.len()).map(|j| format_float(values(i, j))));
                row
            })
            .collect();
        Table { name: name.into(), header, rows }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("csv header");
        for r in &self.rows {
            w.write_record(r).expect("csv row");
        }
        String::from_utf8(w.into_inner().expect("csv flush")).expect("utf-8 csv")
    }
}

pub enum Cell {
    F(f64),
    U(u64),
    S(String),
}

impl Cell {
    fn render(self) -> String {
        match self {
            Cell::F(v) => format_float(v),
            Cell::U(v) => v.to_string(),
            Cell::S(s) => s,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::S(v)
    }
}

/// Builds a table row from heterogeneous values.
#[macro_export]
macro_rules! row {
    ($($v:expr),* $(,)?) => { vec![$($crate::report::Cell::from($v)),*] };
}

/// Everything an experiment produces.
#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    pub results: Value,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    pub log: Vec<String>,
}

impl ExperimentOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Full bundle ready to be written.
#[derive(Debug, Clone)]
pub struct ReportBundle {
    /// Deterministic part of `summary.json`.
    pub summary: Value,
    /// Timing and worker count, excluded from reproducibility comparisons.
    pub runtime: Value,
    pub tables: Vec<Table>,
    pub log: Vec<String>,
    pub passed: bool,
}

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

impl ReportBundle {
    pub fn summary_json(&self) -> String {
        let mut full = self.summary.clone();
        full["runtime"] = self.runtime.clone();
        to_json_string(&full)
    }

    /// `summary.json` without the runtime block.
    pub fn deterministic_json(&self) -> String {
        to_json_string(&self.summary)
    }

    pub fn write(&self, dir: &Path) -> Result<(), RunError> {
        let tables = dir.join("tables");
        fs::create_dir_all(&tables).map_err(|e| RunError::io(tables.display().to_string(), e))?;
        write_file(&dir.join("summary.json"), &self.summary_json())?;
        for t in &self.tables {
            write_file(&tables.join(format!("{}.csv", t.name)), &t.to_csv())?;
        }
        let mut log = self.log.join("\n");
        log.push('\n');
        write_file(&dir.join("log.txt"), &log)
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<(), RunError> {
    fs::write(path, text).map_err(|e| RunError::io(path.display().to_string(), e))
}

/// Error bundle: the resolved config (when available) plus the error record.
pub fn error_summary(config: Option<Value>, record: &crate::error::ErrorRecord) -> String {
    to_json_string(&json!({
        "artifact_version": ARTIFACT_VERSION,
        "config": config.unwrap_or(Value::Null),
        "passed": false,
        "error": record,
    }))
}
