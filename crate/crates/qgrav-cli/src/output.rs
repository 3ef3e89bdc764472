//! Deterministic emission: every run with the same configuration produces
//! byte-identical bytes.
//!
//! Tabular floats are rendered in scientific notation with nine significant
//! digits (`{:.8e}`), enough for exact round-trips in plotting pipelines;
//! the derived-parameter table uses six. CSV uses a header row, comma
//! separators, and LF line endings. JSON is UTF-8 with key order fixed by
//! struct declaration (or sorted, for maps keyed by scenario name).

use std::path::{Path, PathBuf};

use crate::CliError;

/// Scientific notation, nine significant digits (tabular contract).
pub fn sci9(x: f64) -> String {
    format!("{x:.8e}")
}

/// Scientific notation, six significant digits (derived-parameter table).
pub fn sci6(x: f64) -> String {
    format!("{x:.5e}")
}

/// Builds a CSV document from a header and stringified records. The writer
/// terminates records with LF and quotes only when needed (never for the
/// numeric tables emitted here).
pub fn csv_document(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory CSV write");
    for row in rows {
        w.write_record(row).expect("in-memory CSV write");
    }
    let bytes = w.into_inner().expect("in-memory CSV flush");
    String::from_utf8(bytes).expect("CSV output is UTF-8")
}

/// Pretty JSON with a trailing newline.
pub fn json_document<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    let body = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("JSON encoding failed: {e}")))?;
    Ok(format!("{body}\n"))
}

/// Writes to the path, or to stdout when no path was given. A downstream
/// consumer closing the pipe early (`qgrav ... | head`) is not an error.
pub fn emit(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    use std::io::Write;
    match out {
        Some(path) => std::fs::write(path, content).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => match std::io::stdout().lock().write_all(content.as_bytes()) {
            Ok(()) => Ok(()),
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            Err(source) => Err(CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
        },
    }
}

/// Derives a per-scenario output path by inserting the scenario name before
/// the extension: `series.csv` + `scenario1` -> `series.scenario1.csv`.
pub fn per_scenario_path(base: &Path, name: &str) -> PathBuf {
    let stem = base
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("output");
    let file = match base.extension().and_then(|s| s.to_str()) {
        Some(ext) => format!("{stem}.{name}.{ext}"),
        None => format!("{stem}.{name}"),
    };
    base.with_file_name(file)
}
