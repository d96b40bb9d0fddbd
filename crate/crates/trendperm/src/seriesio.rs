//! Series files: plain text with one value per line, or a single-column CSV
//! with header `value` (chosen by the `.csv` extension). Values are written
//! in Rust's shortest round-trip decimal form, so reading back is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

pub fn write_series(path: &Path, values: &[f64]) -> Result<()> {
    let csv = is_csv(path);
    let mut out = String::with_capacity(values.len() * 20);
    if csv {
        out.push_str("value\n");
    }
    for v in values {
        // Shortest representation that parses back to the same f64; always
        // at least as precise as 17 significant digits would be.
        writeln!(out, "{v}").expect("string write");
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_series(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let csv = is_csv(path);
    let mut values = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if idx == 0 && csv {
            if line != "value" {
                return Err(Error::parse(
                    path,
                    1,
                    format!("expected header `value`, got `{line}`"),
                ));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::parse(path, idx + 1, format!("invalid number `{line}`")))?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::parse(path, 1, "no values in series file"));
    }
    Ok(values)
}

fn is_csv(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}
