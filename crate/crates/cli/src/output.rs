//! Result tables, CSV and JSON emission, and the run manifest.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde_json::{json, Value};

use crate::Failure;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
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

/// 17 significant digits in scientific notation; infinities as `inf`/`-inf`.
pub fn format_number(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:.16e}")
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn check_finite(&self) -> Result<(), Failure> {
        for (i, row) in self.rows.iter().enumerate() {
            for (c, cell) in row.iter().enumerate() {
                if let Cell::Num(v) = cell {
                    if v.is_nan() {
                        return Err(Failure::Assertion(format!(
                            "NaN in row {i}, column '{}'; nothing written",
                            self.header[c]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), Failure> {
        self.check_finite()?;
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            out.write_record(row.iter().map(|c| match c {
                Cell::Num(v) => format_number(*v),
                Cell::Int(v) => v.to_string(),
                Cell::Text(s) => s.clone(),
            }))
            .map_err(io)?;
        }
        out.flush().map_err(|e| Failure::Io(e.to_string()))
    }
}

fn io(e: csv::Error) -> Failure {
    Failure::Io(e.to_string())
}

/// Everything a command produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub table: Table,
    /// Full structured result, written with `--format json`.
    pub report: Value,
    /// Violated invariants, each naming a witness. Non-empty means exit 1.
    pub failures: Vec<String>,
    /// Remarks printed to stderr and stored in the manifest.
    pub notes: Vec<String>,
}

pub fn manifest(
    command: &str,
    params: &BTreeMap<String, Value>,
    wall_seconds: f64,
    threads: usize,
    outputs: &[String],
    outcome: &Outcome,
) -> Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "git_describe": env!("MSMC_GIT_DESCRIBE"),
        "parameters": params,
        "threads": threads,
        "wall_time_seconds": wall_seconds,
        "outputs": outputs,
        "failures": outcome.failures,
        "notes": outcome.notes,
    })
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(&["a", "b"]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n");
    }

    #[test]
    fn numbers_keep_seventeen_digits() {
        assert_eq!(format_number(0.1), "1.0000000000000001e-1");
        assert_eq!(format_number(f64::INFINITY), "inf");
        let v = 0.123_456_789_012_345_68;
        assert_eq!(format_number(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn nan_is_rejected() {
        let mut t = Table::new(&["x"]);
        t.push(vec![f64::NAN.into()]);
        assert!(matches!(t.write_csv(Vec::new()), Err(Failure::Assertion(_))));
    }
}
