use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use cslwalk::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::Format;

/// One command's output before serialization.
pub struct Report {
    pub command: &'static str,
    pub params: Value,
    pub header: &'static str,
    pub rows: Vec<Vec<String>>,
    pub results: Vec<Value>,
    /// `(column, formula)` pairs.
    pub formulas: Vec<(&'static str, &'static str)>,
    pub summary: String,
}

/// A `quantity,value,unit` row.
#[derive(Serialize)]
pub struct Quantity {
    pub quantity: &'static str,
    pub value: f64,
    pub unit: &'static str,
}

pub const QUANTITY_HEADER: &str = "quantity,value,unit";

/// Counts and flags print as integers; everything else in `{:e}` form.
fn format_value(v: f64, unit: &str) -> String {
    let dimensionless = unit == "1" || unit == "bool";
    if dimensionless && v.fract() == 0.0 && v.abs() < 9.007_199_254_740_992e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:e}")
    }
}

pub fn quantity_rows(q: &[Quantity]) -> (Vec<Vec<String>>, Vec<Value>) {
    let rows = q
        .iter()
        .map(|q| {
            vec![
                q.quantity.to_string(),
                format_value(q.value, q.unit),
                q.unit.to_string(),
            ]
        })
        .collect();
    let results = q
        .iter()
        .map(|q| serde_json::to_value(q).expect("plain struct"))
        .collect();
    (rows, results)
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut out = String::with_capacity(64 * (self.rows.len() + 1));
                out.push_str(self.header);
                out.push('\n');
                for r in &self.rows {
                    out.push_str(&r.join(","));
                    out.push('\n');
                }
                out
            }
            Format::Json => {
                let refs: serde_json::Map<String, Value> = self
                    .formulas
                    .iter()
                    .map(|(c, f)| ((*c).to_string(), Value::String((*f).to_string())))
                    .collect();
                let doc = json!({
                    "command": self.command,
                    "params": self.params,
                    "results": self.results,
                    "provenance": { "formula_refs": refs },
                });
                let mut s = serde_json::to_string_pretty(&doc).expect("json values serialize");
                s.push('\n');
                s
            }
        }
    }

    pub fn explanation(&self) -> String {
        let mut out = String::new();
        for (c, f) in &self.formulas {
            let _ = writeln!(out, "{c}: {f}");
        }
        out
    }
}

/// Writes `text` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_print_as_integers_and_ratios_do_not() {
        assert_eq!(format_value(24201.0, "1"), "24201");
        assert_eq!(format_value(1.0, "bool"), "1");
        assert_eq!(format_value(6.3e-3, "1"), "6.3e-3");
        assert_eq!(format_value(2.0, "K"), "2e0");
        assert_eq!(format_value(1e300, "1"), "1e300");
    }

    #[test]
    fn atomic_write_replaces_existing_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, "a\n").unwrap();
        write_atomic(&path, "b\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "b\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
