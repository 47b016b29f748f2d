//! CSV tables and JSON reports.
//!
//! Tables are comma separated with a header row and LF line endings. Numbers
//! carry 17 significant digits so that every value re-parses to the same
//! `f64`.

use std::fs;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Scientific notation with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes equal-length columns under `headers`.
pub fn write_columns(out: impl Write, headers: &[&str], columns: &[&[f64]]) -> Result<()> {
    assert_eq!(headers.len(), columns.len());
    let rows = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != rows) {
        return Err(Error::domain("columns of unequal length"));
    }
    let mut out = BufWriter::new(out);
    writeln!(out, "{}", headers.join(","))?;
    for r in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| format_f64(c[r])).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a table written by [`write_columns`], checking the header.
pub fn read_columns(input: impl BufRead, headers: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim_end() != headers.join(",") {
        return Err(Error::domain(format!(
            "expected header `{}`, found `{header}`",
            headers.join(",")
        )));
    }
    let mut columns = vec![Vec::new(); headers.len()];
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != headers.len() {
            return Err(Error::domain(format!(
                "line {}: expected {} fields, found {}",
                lineno + 2,
                headers.len(),
                fields.len()
            )));
        }
        for (col, field) in columns.iter_mut().zip(fields) {
            let value = field.trim().parse::<f64>().map_err(|e| {
                Error::domain(format!("line {}: bad number `{field}`: {e}", lineno + 2))
            })?;
            col.push(value);
        }
    }
    Ok(columns)
}

pub fn write_csv_file(path: &Path, headers: &[&str], columns: &[&[f64]]) -> Result<()> {
    write_columns(fs::File::create(path)?, headers, columns)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json_file(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
