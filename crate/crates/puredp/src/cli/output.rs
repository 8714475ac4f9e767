//! Deterministic result emission: CSV with 9-significant-digit floats and a
//! stable column order, JSON for reports and pmf dumps. Reruns with the same
//! seed produce byte-identical files.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::Result;

/// Formats a float with 9 significant digits in scientific notation.
pub fn fmt_sig9(x: f64) -> String {
    format!("{x:.8e}")
}

/// A record that knows its CSV schema.
pub trait CsvRecord {
    fn csv_header() -> &'static str;
    fn csv_row(&self) -> String;
}

/// Output format for [`emit_results`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Writes records to `path`: a header row plus one row per record for CSV,
/// or a JSON array. An empty record list produces a header-only CSV file.
pub fn emit_results<R: CsvRecord + Serialize>(
    records: &[R],
    path: &Path,
    format: Format,
) -> Result<()> {
    let body = render_results(records, format)?;
    fs::write(path, body)?;
    Ok(())
}

pub fn render_results<R: CsvRecord + Serialize>(records: &[R], format: Format) -> Result<String> {
    match format {
        Format::Csv => {
            let mut out = String::new();
            out.push_str(R::csv_header());
            out.push('\n');
            for r in records {
                out.push_str(&r.csv_row());
                out.push('\n');
            }
            Ok(out)
        }
        Format::Json => Ok(format!("{}\n", serde_json::to_string_pretty(records)?)),
    }
}

/// Writes any serializable report as pretty JSON.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    fs::write(path, format!("{}\n", serde_json::to_string_pretty(value)?))?;
    Ok(())
}
