use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use relmarg::BigRational;
use serde::Serialize;

/// An exact value with its decimal rendering.
#[derive(Clone, Debug, Serialize)]
pub struct Value {
    pub exact: String,
    pub decimal: f64,
}

impl Value {
    pub fn new(r: &BigRational) -> Self {
        use num_traits::ToPrimitive;
        Value {
            exact: r.to_string(),
            decimal: r.to_f64().unwrap_or(f64::NAN),
        }
    }
}

pub fn json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let s = json_string(value)?;
    std::io::stdout().lock().write_all(s.as_bytes())?;
    Ok(())
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

/// Renders rows with a header as CSV.
pub fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn print_csv(header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    std::io::stdout().lock().write_all(csv_string(header, rows)?.as_bytes())?;
    Ok(())
}
