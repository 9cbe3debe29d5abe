//! Report files for experiment runs: CSV tables and a plain-text summary.
//!
//! Numbers are written in scientific notation with 17 significant digits,
//! enough for exact f64 round-trips, so re-running a config produces
//! bit-identical files that can serve as regression baselines. Files are
//! written to a temporary name in the target directory and renamed into
//! place, so readers never observe partial output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;

/// One f64 in the report dialect: `.` decimal point, scientific notation,
/// 17 significant digits.
pub fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

/// In-memory CSV table with a fixed header.
#[derive(Debug, Clone)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        CsvTable {
            header: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Number of value columns.
    pub fn width(&self) -> usize {
        self.header.len()
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(
            row.len(),
            self.header.len(),
            "row width must match the header"
        );
        self.rows.push(row.to_vec());
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(',');
                }
                first = false;
                let _ = write!(out, "{v:.16e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.render())
    }
}

/// Write `content` to `path` via a temporary file in the same directory
/// and an atomic rename.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}tmp-{}",
        path.extension()
            .map(|e| format!("{}.", e.to_string_lossy()))
            .unwrap_or_default(),
        std::process::id()
    ));
    fs::write(&tmp, content)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Plain-text run summary. Every observable line carries the value and
/// the formula it implements, so numbers in the CSV files are traceable
/// without consulting anything outside the repository. Content is fully
/// deterministic: no timestamps, hostnames or paths.
#[derive(Debug, Default, Clone)]
pub struct Summary {
    text: String,
}

impl Summary {
    pub fn new() -> Self {
        Summary::default()
    }

    /// Top-level `key: value` line.
    pub fn field(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.text, "{key}: {value}");
    }

    /// Section header.
    pub fn section(&mut self, title: &str) {
        if !self.text.is_empty() {
            self.text.push('\n');
        }
        let _ = writeln!(self.text, "[{title}]");
    }

    /// An observable with the formula that defines it.
    pub fn observable(&mut self, name: &str, value: f64, formula: &str) {
        let _ = writeln!(
            self.text,
            "  {name} = {}\n      from: {formula}",
            format_value(value)
        );
    }

    /// A pass/fail comparison line with its tolerance.
    pub fn check(&mut self, name: &str, deviation: f64, tolerance: f64) {
        let verdict = if deviation.abs() <= tolerance {
            "PASS"
        } else {
            "FAIL"
        };
        let _ = writeln!(
            self.text,
            "  {name}: deviation {} (tolerance {}) -> {verdict}",
            format_value(deviation),
            format_value(tolerance)
        );
    }

    /// Free-form annotation line inside the current section.
    pub fn note(&mut self, line: &str) {
        let _ = writeln!(self.text, "  {line}");
    }

    pub fn render(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.text)
    }
}
