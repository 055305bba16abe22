//! Line-delimited panel files.
//!
//! Each non-blank line is one JSON document holding a panel plus a
//! `schema_version` field. See `docs/panel-format.md` for the field list.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};
use synapse_core::{ForecastPanel, RawPanel};

use crate::error::{HarnessError, Result};

pub const SCHEMA_VERSION: u64 = 1;

const PANEL_KEYS: &[&str] = &[
    "schema_version",
    "series_id",
    "context",
    "actuals",
    "horizon",
    "seasonality",
    "levels",
    "models",
    "meta",
];
const MODEL_KEYS: &[&str] = &["name", "quantiles", "backtest"];
const META_KEYS: &[&str] = &["domain", "horizon_class", "frequency"];

fn retain_keys(value: &mut Value, keys: &[&str]) {
    if let Value::Object(map) = value {
        map.retain(|k, _| keys.contains(&k.as_str()));
    }
}

/// Drop fields this version does not know about (lenient mode).
fn strip_unknown(doc: &mut Value) {
    retain_keys(doc, PANEL_KEYS);
    if let Some(Value::Array(models)) = doc.get_mut("models") {
        for m in models {
            retain_keys(m, MODEL_KEYS);
        }
    }
    if let Some(meta) = doc.get_mut("meta") {
        retain_keys(meta, META_KEYS);
    }
}

/// Parse one panel document. In strict mode unknown fields are rejected.
pub fn parse_panel_line(
    text: &str,
    file: &Path,
    line: usize,
    strict: bool,
) -> Result<ForecastPanel> {
    let parse_err = |message: String| HarnessError::Parse {
        file: file.to_path_buf(),
        line,
        message,
    };
    let mut doc: Value = serde_json::from_str(text).map_err(|e| parse_err(e.to_string()))?;
    let Value::Object(map) = &mut doc else {
        return Err(parse_err("expected a JSON object".into()));
    };
    let version = match map.remove("schema_version") {
        Some(v) => v
            .as_u64()
            .ok_or_else(|| parse_err("schema_version must be an unsigned integer".into()))?,
        None => return Err(parse_err("missing field `schema_version`".into())),
    };
    if version != SCHEMA_VERSION {
        return Err(HarnessError::SchemaVersionMismatch {
            file: file.to_path_buf(),
            line,
            found: version,
            expected: SCHEMA_VERSION,
        });
    }
    if !strict {
        strip_unknown(&mut doc);
    }
    let raw: RawPanel = serde_json::from_value(doc).map_err(|e| parse_err(e.to_string()))?;
    synapse_core::validate_panel(raw).map_err(|source| HarnessError::InvalidPanel {
        file: file.to_path_buf(),
        line,
        source,
    })
}

pub fn read_panel_file(path: &Path, strict: bool) -> Result<Vec<ForecastPanel>> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_panel_line(l, path, i + 1, strict))
        .collect()
}

/// Panel files under `path`: the path itself, or every `*.jsonl` file in a
/// directory, sorted by name.
fn panel_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_dir() {
        let mut files = Vec::new();
        for entry in fs::read_dir(path).map_err(|e| HarnessError::io(path, e))? {
            let p = entry.map_err(|e| HarnessError::io(path, e))?.path();
            if p.is_file() && p.extension().is_some_and(|e| e == "jsonl") {
                files.push(p);
            }
        }
        files.sort();
        Ok(files)
    } else if path.exists() {
        Ok(vec![path.to_path_buf()])
    } else {
        Err(HarnessError::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory"),
        ))
    }
}

/// Load and validate every panel under `path`.
pub fn load_panels(path: &Path, strict: bool) -> Result<Vec<ForecastPanel>> {
    let mut panels = Vec::new();
    for file in panel_files(path)? {
        panels.extend(read_panel_file(&file, strict)?);
    }
    Ok(panels)
}

/// Serialize one panel as a single-line document.
pub fn panel_to_line(panel: &ForecastPanel) -> Result<String> {
    let mut doc = serde_json::to_value(panel).map_err(|e| HarnessError::Encode(e.to_string()))?;
    if let Value::Object(map) = &mut doc {
        let mut out = Map::new();
        out.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
        out.append(map);
        doc = Value::Object(out);
    }
    serde_json::to_string(&doc).map_err(|e| HarnessError::Encode(e.to_string()))
}

pub fn write_panels(path: &Path, panels: &[ForecastPanel]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for panel in panels {
        writeln!(out, "{}", panel_to_line(panel)?).map_err(|e| HarnessError::io(path, e))?;
    }
    out.flush().map_err(|e| HarnessError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use synapse_core::synthetic::build_benchmark_suite;

    #[test]
    fn line_round_trip_is_exact() {
        let panels = build_benchmark_suite(2, 3).unwrap();
        for p in &panels {
            let line = panel_to_line(p).unwrap();
            let back = parse_panel_line(&line, Path::new("mem"), 1, true).unwrap();
            assert_eq!(&back, p);
            assert_eq!(panel_to_line(&back).unwrap(), line);
        }
    }

    #[test]
    fn version_and_unknown_fields() {
        let p = &build_benchmark_suite(1, 3).unwrap()[0];
        let line = panel_to_line(p).unwrap();
        let bumped = line.replacen("\"schema_version\":1", "\"schema_version\":2", 1);
        assert!(matches!(
            parse_panel_line(&bumped, Path::new("f"), 4, true),
            Err(HarnessError::SchemaVersionMismatch {
                found: 2,
                line: 4,
                ..
            })
        ));
        let extra = line.replacen('{', "{\"note\":\"x\",", 1);
        assert!(matches!(
            parse_panel_line(&extra, Path::new("f"), 1, true),
            Err(HarnessError::Parse { .. })
        ));
        assert_eq!(
            &parse_panel_line(&extra, Path::new("f"), 1, false).unwrap(),
            p
        );
        let missing = line.replacen("\"schema_version\":1,", "", 1);
        assert!(parse_panel_line(&missing, Path::new("f"), 1, false).is_err());
    }

    #[test]
    fn corrupted_line_reports_file_and_line() {
        let err = parse_panel_line("{not json", Path::new("broken.jsonl"), 7, true).unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("broken.jsonl:7:"), "{msg}");
        assert!(err.is_validation());
    }
}
