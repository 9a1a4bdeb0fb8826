//! Deterministic report rendering: JSON with floats at 17 significant
//! digits, CSV with fixed column order, and a plain key/value table.

use std::io::Write;
use std::str::FromStr;

use serde_json::Value;

/// A float as a JSON number spelled with 17 significant digits, so repeated
/// runs are byte-identical and parse back exactly.
pub fn fnum(x: f64) -> Value {
    let number = serde_json::Number::from_str(&fcell(x))
        .expect("formatted float parses as a JSON number");
    Value::Number(number)
}

/// Render a float for CSV cells with the same 17-significant-digit spelling.
/// Negative zero prints as zero.
pub fn fcell(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

/// One CSV view of a report: header plus rows in a fixed order.
#[derive(Debug, Clone, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

/// Key/value rendering of a JSON report for quick reading.
fn render_table(value: &Value, prefix: &str, out: &mut String) {
    match value {
        Value::Object(map) => {
            for (key, child) in map {
                let path = if prefix.is_empty() {
                    key.clone()
                } else {
                    format!("{prefix}.{key}")
                };
                render_table(child, &path, out);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                render_table(child, &format!("{prefix}[{i}]"), out);
            }
        }
        scalar => {
            out.push_str(prefix);
            out.push_str(" = ");
            out.push_str(&scalar.to_string());
            out.push('\n');
        }
    }
}

/// Write the report in the requested format to a file or stdout.
pub fn emit(
    json: &Value,
    csv: &CsvTable,
    format: Format,
    output: Option<&std::path::Path>,
) -> std::io::Result<()> {
    let text = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(json).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Csv => csv.render(),
        Format::Table => {
            let mut s = String::new();
            render_table(json, "", &mut s);
            s
        }
    };
    match output {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}
