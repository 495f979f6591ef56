//! Report rows, CSV/JSON writers and baseline files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

/// Regression tolerance on empirical constants.
pub const BASELINE_SLACK: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
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

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn to_json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Float(x) if x.is_finite() => json!(x),
            Cell::Float(x) => json!(x.to_string()),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }

    fn to_field(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) => format!("{x:?}"),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

/// One command's output.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub command: String,
    /// Fully resolved configuration, in display order.
    pub config: Vec<(String, String)>,
    /// Derived scalars (fits, seminorms, parameters chosen by the library).
    pub summary: Vec<(String, String)>,
    pub warnings: Vec<String>,
    /// Failed checks; any entry makes the run exit with [`crate::EXIT_CHECK`].
    pub failures: Vec<String>,
    /// Empirical constants tracked by baseline files (larger is worse).
    pub constants: BTreeMap<String, f64>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Report {
    pub fn new(command: &str, columns: Vec<&'static str>) -> Self {
        Self {
            command: command.to_string(),
            columns,
            ..Self::default()
        }
    }

    pub fn config(&mut self, key: &str, value: impl Into<Cell>) {
        self.config.push((key.to_string(), value.into().to_field()));
    }

    pub fn summary(&mut self, key: &str, value: impl Into<Cell>) {
        self.summary.push((key.to_string(), value.into().to_field()));
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Csv => self.render_csv(),
            Format::Json => Ok(serde_json::to_string_pretty(&self.to_json())? + "\n"),
        }
    }

    fn render_csv(&self) -> Result<String> {
        let mut out = Vec::new();
        writeln!(out, "# mra {}", mra_core::VERSION)?;
        writeln!(out, "# command: {}", self.command)?;
        for (k, v) in &self.config {
            writeln!(out, "# config {k}={v}")?;
        }
        for (k, v) in &self.summary {
            writeln!(out, "# summary {k}={v}")?;
        }
        for w in &self.warnings {
            writeln!(out, "# warning: {w}")?;
        }
        for f in &self.failures {
            writeln!(out, "# failure: {f}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::to_field))?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }

    fn to_json(&self) -> Value {
        let pairs = |v: &[(String, String)]| -> Map<String, Value> {
            v.iter().map(|(k, x)| (k.clone(), json!(x))).collect()
        };
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                Value::Object(
                    self.columns
                        .iter()
                        .zip(r)
                        .map(|(c, v)| (c.to_string(), v.to_json()))
                        .collect(),
                )
            })
            .collect();
        json!({
            "tool": "mra",
            "version": mra_core::VERSION,
            "command": self.command,
            "config": pairs(&self.config),
            "summary": pairs(&self.summary),
            "warnings": self.warnings,
            "failures": self.failures,
            "constants": self.constants,
            "columns": self.columns,
            "rows": rows,
        })
    }
}

/// Stored empirical constants of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub version: String,
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub constants: BTreeMap<String, f64>,
}

impl Baseline {
    pub fn of(report: &Report) -> Self {
        Self {
            version: mra_core::VERSION.to_string(),
            command: report.command.clone(),
            config: report.config.iter().cloned().collect(),
            constants: report.constants.clone(),
        }
    }
}

/// `reports/widths.csv` -> `reports/widths.baseline.json`.
pub fn baseline_path(output: &Path) -> PathBuf {
    output.with_extension("baseline.json")
}

/// Writes a fresh baseline, or compares against the stored one. Regressions
/// are recorded as failures, configuration mismatches as warnings.
pub fn handle_baseline(report: &mut Report, output: Option<&Path>, update: bool) -> Result<()> {
    let Some(output) = output else {
        if update {
            bail!("--update-baselines needs an output file (--out or MRA_OUTPUT_DIR)");
        }
        return Ok(());
    };
    if report.constants.is_empty() {
        return Ok(());
    }
    let path = baseline_path(output);
    let current = Baseline::of(report);
    if update {
        let text = serde_json::to_string_pretty(&current)? + "\n";
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        return Ok(());
    }
    if !path.exists() {
        return Ok(());
    }
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let stored: Baseline =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if stored.command != current.command || stored.config != current.config {
        report
            .warnings
            .push(format!("baseline {} has a different configuration; not compared", path.display()));
        return Ok(());
    }
    for (name, value) in &current.constants {
        match stored.constants.get(name) {
            Some(&b) if *value > BASELINE_SLACK * b => report
                .failures
                .push(format!("regression in {name}: {value} exceeds {BASELINE_SLACK} x baseline {b}")),
            Some(_) => {}
            None => report.warnings.push(format!("no baseline value for {name}")),
        }
    }
    Ok(())
}
