//! Tabular reports written as CSV or as JSON with the resolved configuration.

use std::io::Write;

use serde_json::{json, Value};

use crate::config::{Format, Resolved};

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    /// CSV text; floats carry 17 significant digits.
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.16e}"),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
            Cell::Empty => Value::Null,
        }
    }
}

/// A table plus a free-form summary.
#[derive(Debug, Clone)]
pub struct Report {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Value,
}

impl Report {
    pub fn new(columns: Vec<String>) -> Self {
        Self { columns, rows: Vec::new(), summary: Value::Null }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> anyhow::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        Ok(w.into_inner()?)
    }

    /// JSON document with the resolved configuration, the summary and the table.
    pub fn to_json(&self, resolved: &Resolved) -> anyhow::Result<Vec<u8>> {
        let doc = json!({
            "command": resolved.command.name(),
            "config": serde_json::to_value(&resolved.config)?,
            "seed": resolved.seed,
            "summary": self.summary,
            "columns": self.columns,
            "rows": self.rows.iter().map(|r| r.iter().map(Cell::json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        });
        let mut bytes = serde_json::to_vec_pretty(&doc)?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    /// Summary-only JSON document, written next to a CSV table.
    pub fn summary_json(&self, resolved: &Resolved) -> anyhow::Result<Vec<u8>> {
        let doc = json!({
            "command": resolved.command.name(),
            "config": serde_json::to_value(&resolved.config)?,
            "seed": resolved.seed,
            "summary": self.summary,
        });
        let mut bytes = serde_json::to_vec_pretty(&doc)?;
        bytes.push(b'\n');
        Ok(bytes)
    }
}

/// Path of the summary document written next to a CSV table.
pub fn summary_path(csv_path: &str) -> String {
    match csv_path.strip_suffix(".csv") {
        Some(stem) => format!("{stem}.summary.json"),
        None => format!("{csv_path}.summary.json"),
    }
}

fn write_bytes(path: Option<&str>, bytes: &[u8]) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| anyhow::anyhow!("cannot write `{p}`: {e}")),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

/// Writes `report` in the configured format. A CSV written to a file is
/// accompanied by `<stem>.summary.json` when `with_summary` is set.
pub fn emit(report: &Report, resolved: &Resolved, with_summary: bool) -> anyhow::Result<()> {
    let path = resolved.out.as_deref();
    match resolved.format {
        Format::Json => write_bytes(path, &report.to_json(resolved)?),
        Format::Csv => {
            write_bytes(path, &report.to_csv()?)?;
            if let (true, Some(p)) = (with_summary, path) {
                write_bytes(Some(&summary_path(p)), &report.summary_json(resolved)?)?;
            }
            Ok(())
        }
    }
}
