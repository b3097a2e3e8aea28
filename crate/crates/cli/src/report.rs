//! Output artifacts: CSV tables with a fixed column order and 17
//! significant digits, plus a `manifest.json` describing the run. Nothing
//! here depends on clocks or iteration order, so reruns with the same
//! inputs are byte-identical.

use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

#[derive(Debug, Clone)]
pub enum Field {
    Int(i64),
    Num(f64),
    Text(String),
}

impl Field {
    fn render(&self) -> String {
        match self {
            Field::Int(v) => v.to_string(),
            // 17 significant digits round-trip every f64 exactly.
            Field::Num(v) => format!("{v:.16e}"),
            Field::Text(s) => s.clone(),
        }
    }
}

pub fn num(v: f64) -> Field {
    Field::Num(v)
}

pub fn int(v: i64) -> Field {
    Field::Int(v)
}

pub fn text(s: impl Into<String>) -> Field {
    Field::Text(s.into())
}

/// Writes `name` under `out`, creating the directory; returns the path.
pub fn write_csv(
    out: &Path,
    name: &str,
    header: &[&str],
    rows: &[Vec<Field>],
) -> Result<PathBuf, CliError> {
    fs::create_dir_all(out)?;
    let mut body = String::new();
    body.push_str(&header.join(","));
    body.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len(), "row width must match header");
        let cells: Vec<String> = row.iter().map(Field::render).collect();
        body.push_str(&cells.join(","));
        body.push('\n');
    }
    let path = out.join(name);
    fs::write(&path, body)?;
    Ok(path)
}

/// Serializes the manifest with sorted keys (serde_json's map is ordered),
/// so the file is deterministic for identical runs.
pub fn write_manifest(out: &Path, body: serde_json::Value) -> Result<PathBuf, CliError> {
    fs::create_dir_all(out)?;
    let path = out.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&body)
        .map_err(|e| CliError::usage(format!("manifest serialization failed: {e}")))?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}
