//! Matrix files: one matrix per line (JSONL), either a bare array of rows
//! or an object with a `matrix` field. Blank lines and lines starting with
//! `#` are skipped. Inputs are scaled to determinant ±1.

use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::matrix::{matrix_from_rows, GroupElement, Matrix};

fn rows_of(value: &Value) -> Option<Vec<Vec<f64>>> {
    let rows = match value {
        Value::Object(map) => map.get("matrix")?,
        other => other,
    };
    rows.as_array()?
        .iter()
        .map(|r| r.as_array()?.iter().map(|x| x.as_f64()).collect::<Option<Vec<f64>>>())
        .collect()
}

/// Parses one matrix line; errors carry no line number.
pub fn parse_matrix(line: &str) -> Result<GroupElement> {
    let value: Value = serde_json::from_str(line).map_err(|e| Error::Parse(e.to_string()))?;
    let rows = rows_of(&value).ok_or_else(|| Error::Parse("expected an array of numeric rows".into()))?;
    GroupElement::new(matrix_from_rows(&rows)?)
}

/// Parses a JSONL matrix file; errors name the 1-based line.
pub fn read_matrices(text: &str) -> Result<Vec<GroupElement>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let g = parse_matrix(line).map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?;
        if let Some(first) = out.first().map(|g: &GroupElement| g.dim()) {
            if g.dim() != first {
                return Err(Error::Parse(format!("line {}: dimension {} differs from {first}", i + 1, g.dim())));
            }
        }
        out.push(g);
    }
    if out.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(out)
}

pub fn read_matrix_file(path: &Path) -> Result<Vec<GroupElement>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    read_matrices(&text)
}

/// `[[a, b], [c, d]]` with every entry in `{:.16e}`, which round-trips f64.
pub fn matrix_json(m: &Matrix) -> String {
    let rows: Vec<String> = (0..m.nrows())
        .map(|i| {
            let cells: Vec<String> = m.row(i).iter().map(|x| format!("{x:.16e}")).collect();
            format!("[{}]", cells.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

/// One matrix per line.
pub fn write_matrices(elements: &[GroupElement]) -> String {
    elements.iter().map(|g| matrix_json(g.matrix()) + "\n").collect()
}
