//! Deterministic results emission.
//!
//! JSON output is canonical: keys sorted, two-space indent, floats printed
//! with nine significant digits, integers left as integers. Emitting the
//! same record twice yields byte-identical files, and re-emitting a parsed
//! file reproduces it exactly. CSV output is a header row followed by one
//! row per fold.

use std::path::Path;

use serde_json::Value;

use crate::error::{Error, Result};

use super::experiment::ResultsRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResultsFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ResultsFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ResultsFormat::Json),
            "csv" => Ok(ResultsFormat::Csv),
            other => Err(Error::Parse(format!(
                "unknown results format '{other}' (expected json or csv)"
            ))),
        }
    }
}

/// Nine-significant-digit float formatting (fixed across platforms).
fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.8e}")
    } else {
        "null".to_string()
    }
}

fn write_value(value: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent + 1);
    let close = "  ".repeat(indent);
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else {
                out.push_str(&fmt_float(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("strings always serialize"))
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad);
                write_value(item, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&close);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, key) in keys.iter().enumerate() {
                out.push_str(&pad);
                out.push_str(&serde_json::to_string(key).expect("strings always serialize"));
                out.push_str(": ");
                write_value(&map[*key], indent + 1, out);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&close);
            out.push('}');
        }
    }
}

/// Renders a results record in the requested format.
pub fn render_results(record: &ResultsRecord, format: ResultsFormat) -> Result<String> {
    match format {
        ResultsFormat::Json => {
            let value = serde_json::to_value(record)?;
            let mut out = String::new();
            write_value(&value, 0, &mut out);
            out.push('\n');
            Ok(out)
        }
        ResultsFormat::Csv => {
            let mut out = String::from("fold,loss\n");
            for (f, loss) in record.fold_losses.iter().enumerate() {
                out.push_str(&format!("{f},{}\n", fmt_float(*loss)));
            }
            Ok(out)
        }
    }
}

/// Writes a results record to `path`.
pub fn emit_results(
    record: &ResultsRecord,
    path: impl AsRef<Path>,
    format: ResultsFormat,
) -> Result<()> {
    std::fs::write(path.as_ref(), render_results(record, format)?)?;
    Ok(())
}
