//! Text formats: headerless CSV matrices, 17-significant-digit JSON, and the
//! JSON-lines step trace.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{Axis, ScheduleStep, SquareMatrix};
use crate::support::KSpec;

/// Scientific notation with 17 significant digits; round-trips every `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        // keeps "-0" out of the files
        return "0".to_string();
    }
    format!("{x:.16e}")
}

/// Parses a headerless CSV matrix. Blank lines are skipped.
pub fn parse_matrix_csv(text: &str) -> Result<SquareMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| {
                let f = f.trim();
                f.parse::<f64>()
                    .map_err(|_| Error::Io(format!("line {}: {f:?} is not a number", lineno + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Io("matrix file is empty".into()));
    }
    SquareMatrix::from_rows(&rows)
}

pub fn matrix_to_csv(m: &SquareMatrix) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Field of a table CSV.
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Missing,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) if x.is_finite() => fmt_f64(*x),
            Cell::Num(x) => x.to_string(),
            Cell::Int(k) => k.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Missing => String::new(),
        }
    }
}

pub fn table_to_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<Cell>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(Cell::render).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Compact JSON whose floats carry 17 significant digits. Non-finite floats
/// become `null`.
struct Sig17;

impl serde_json::ser::Formatter for Sig17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        if value.is_finite() {
            w.write_all(fmt_f64(value).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(w, f64::from(value))
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sig17);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

#[derive(Deserialize)]
struct StepLine {
    axis: Axis,
    index: usize,
}

/// Reads steps from JSON lines carrying at least `axis` ("r"/"c") and a
/// 1-based `index`, as written by the run trace.
pub fn parse_trace(text: &str) -> Result<Vec<ScheduleStep>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let s: StepLine = serde_json::from_str(line)
            .map_err(|e| Error::Io(format!("trace line {}: {e}", lineno + 1)))?;
        if s.index == 0 {
            return Err(Error::Io(format!(
                "trace line {}: indices are 1-based",
                lineno + 1
            )));
        }
        out.push(ScheduleStep {
            axis: s.axis,
            index: s.index - 1,
        });
    }
    Ok(out)
}

pub fn parse_kspec(text: &str) -> Result<KSpec> {
    serde_json::from_str(text).map_err(|e| Error::Io(format!("K specification: {e}")))
}
