//! Sample files in, CSV and JSON out.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use mellin_deconv::Sample;
use serde::Serialize;

use crate::error::CliError;

/// Parse one positive real per line. Blank lines are skipped and a
/// non-numeric first line is taken as a header.
pub fn parse_sample(text: &str, path: &Path) -> Result<Sample, CliError> {
    let mut points = Vec::new();
    let mut problems = Vec::new();
    let mut seen_content = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let first = !seen_content;
        seen_content = true;
        match line.parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => points.push(v),
            Ok(v) => problems.push(format!("line {}: value {v} is not a positive finite number", i + 1)),
            Err(_) if first => {}
            Err(_) => problems.push(format!("line {}: `{line}` is not a number", i + 1)),
        }
    }
    if points.is_empty() && problems.is_empty() {
        problems.push("no observations".into());
    }
    if !problems.is_empty() {
        return Err(CliError::Input {
            path: path.to_path_buf(),
            problems,
        });
    }
    Ok(Sample::new(points)?)
}

pub fn read_sample(path: &Path) -> Result<Sample, CliError> {
    let text = fs::read_to_string(path).map_err(CliError::io(path))?;
    parse_sample(&text, path)
}

/// 17 significant digits, so values survive a round trip.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let _ = writeln!(out, "{}", row.join(","));
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    fs::write(path, text).map_err(CliError::io(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_text(path, &text)
}

/// `out.csv` -> `out.selection.json`
pub fn sidecar_path(output: &Path) -> PathBuf {
    output.with_extension("selection.json")
}
