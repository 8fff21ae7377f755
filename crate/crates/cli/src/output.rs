//! CSV and JSON emission plus the run manifest.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt15(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(x) if x.is_finite() => json!(x),
            Cell::Num(_) => Value::Null,
            Cell::Int(i) => json!(i),
            Cell::Text(s) => json!(s),
        }
    }
}

/// Tabular experiment output with an optional free-form summary.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Cells that could not be computed and are emitted as `nan`.
    pub failures: usize,
    pub summary: Value,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
            failures: 0,
            summary: Value::Null,
        }
    }
}

/// Decimal notation with 15 significant digits; `nan` for non-finite values.
pub fn fmt15(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // exponent after rounding to 15 digits, so carries are accounted for
    let sci = format!("{x:.14e}");
    let exponent: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    let decimals = (14 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn csv_bytes(table: &Table) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::csv))?;
    }
    w.into_inner().map_err(|e| csv::Error::from(e.into_error()))
}

pub fn json_bytes(table: &Table) -> Vec<u8> {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|r| Value::Array(r.iter().map(Cell::json).collect()))
        .collect();
    let doc = json!({
        "columns": table.columns,
        "rows": rows,
        "failures": table.failures,
        "summary": table.summary,
    });
    let mut out = serde_json::to_vec_pretty(&doc).expect("in-memory JSON");
    out.push(b'\n');
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub artifact: &'static str,
    pub version: &'static str,
    pub experiment: String,
    pub output: String,
    pub rows: usize,
    pub failures: usize,
    pub sha256: String,
    pub duration_seconds: f64,
    pub workers: usize,
    pub timestamp: String,
    pub config: String,
}

/// `<dir>/<stem>.manifest.json` next to `output`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("output");
    output.with_file_name(format!("{stem}.manifest.json"))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_significant_digits() {
        assert_eq!(fmt15(0.5), "0.500000000000000");
        assert_eq!(fmt15(-2.0), "-2.00000000000000");
        assert_eq!(fmt15(1.0 / 3.0), "0.333333333333333");
        assert_eq!(fmt15(123456.789), "123456.789000000");
        assert_eq!(fmt15(1e-5), "0.0000100000000000000");
        assert_eq!(fmt15(1e15), "1000000000000000");
        assert_eq!(fmt15(0.0), "0");
        assert_eq!(fmt15(-0.0), "0");
        assert_eq!(fmt15(f64::NAN), "nan");
        assert_eq!(fmt15(9.9999999999999995), "10.0000000000000");
        assert_eq!(fmt15(99999.99999999999), "100000.000000000");
    }

    #[test]
    fn parsed_back_within_rounding() {
        for x in [std::f64::consts::PI, -1.234e-7, 6.02e23, 0.1 + 0.2] {
            let y: f64 = fmt15(x).parse().unwrap();
            assert!((x - y).abs() <= 1e-14 * x.abs(), "{x} -> {}", fmt15(x));
        }
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(vec!["gamma", "kind", "t"]);
        t.rows.push(vec![Cell::Num(0.25), Cell::Text("merge".into()), Cell::Num(f64::NAN)]);
        t.rows.push(vec![Cell::Num(1.0), Cell::Text("a,b".into()), Cell::Int(3)]);
        let s = String::from_utf8(csv_bytes(&t).unwrap()).unwrap();
        assert_eq!(
            s,
            "gamma,kind,t\n0.250000000000000,merge,nan\n1.00000000000000,\"a,b\",3\n"
        );
    }

    #[test]
    fn json_uses_null_for_failed_cells() {
        let mut t = Table::new(vec!["t"]);
        t.rows.push(vec![Cell::Num(f64::NAN)]);
        t.failures = 1;
        let v: Value = serde_json::from_slice(&json_bytes(&t)).unwrap();
        assert_eq!(v["rows"][0][0], Value::Null);
        assert_eq!(v["failures"], 1);
    }

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(manifest_path(Path::new("out/map.csv")), PathBuf::from("out/map.manifest.json"));
        assert_eq!(manifest_path(Path::new("run.json")), PathBuf::from("run.manifest.json"));
    }
}
