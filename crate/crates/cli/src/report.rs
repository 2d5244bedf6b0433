//! Deterministic report emission.
//!
//! Every CSV starts with a `# seed=N` header line and every JSON document
//! carries a `seed` field, so any number in a report can be traced back to
//! the root seed that produced it. Floats are printed with the shortest
//! round-trip representation, JSON object keys are sorted, and rows are
//! emitted in the order the caller assembled them — rerunning a command on
//! the same inputs rewrites every report byte-for-byte.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Shortest round-trip float formatting (`1.25`, not `1.2500000000000001`).
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// `Option<f64>` as a CSV cell: absent values stay empty, never `NaN`.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Quotes a CSV cell only when it needs it, so numeric cells stay bare.
fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

/// CSV with the seed pinned on the first line.
pub fn write_csv(path: &Path, seed: u64, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut text = format!("# seed={seed}\n");
    text.push_str(&columns.join(","));
    text.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), columns.len(), "ragged CSV row for {path:?}");
        let cells: Vec<String> = row.iter().map(|c| csv_cell(c)).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    write_bytes(path, text.as_bytes())
}

/// Pretty JSON with a `seed` field merged into the top-level object.
pub fn write_json(path: &Path, seed: u64, payload: serde_json::Value) -> Result<()> {
    let mut obj = match payload {
        serde_json::Value::Object(map) => map,
        other => {
            let mut map = serde_json::Map::new();
            map.insert("data".into(), other);
            map
        }
    };
    obj.insert("seed".into(), serde_json::json!(seed));
    let text = serde_json::to_string_pretty(&serde_json::Value::Object(obj))
        .context("serializing JSON report")?;
    write_bytes(path, format!("{text}\n").as_bytes())
}

/// One serialized record per line; the stream format the pipeline stages
/// exchange. Seed provenance for these lives in the sibling `summary.json`.
pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut text = String::new();
    for row in rows {
        text.push_str(&serde_json::to_string(row).context("serializing JSONL row")?);
        text.push('\n');
    }
    write_bytes(path, text.as_bytes())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let raw = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(line)
                .with_context(|| format!("{}:{}", path.display(), lineno + 1))?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_cells_quote_only_when_needed() {
        assert_eq!(csv_cell("plain"), "plain");
        assert_eq!(csv_cell("0.25"), "0.25");
        assert_eq!(csv_cell("a,b"), "\"a,b\"");
        assert_eq!(csv_cell("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn floats_print_shortest_roundtrip() {
        assert_eq!(fmt_f64(0.1 + 0.2), "0.30000000000000004");
        assert_eq!(fmt_f64(0.25), "0.25");
        assert_eq!(fmt_opt(None), "");
    }

    #[test]
    fn csv_and_json_rewrites_are_byte_identical() {
        let dir = std::env::temp_dir().join("consent-audit-report-test");
        std::fs::create_dir_all(&dir).unwrap();
        let csv = dir.join("t.csv");
        let rows = vec![vec!["a".to_string(), fmt_f64(1.5)]];
        write_csv(&csv, 7, &["name", "value"], &rows).unwrap();
        let first = std::fs::read(&csv).unwrap();
        write_csv(&csv, 7, &["name", "value"], &rows).unwrap();
        assert_eq!(first, std::fs::read(&csv).unwrap());
        assert!(String::from_utf8(first).unwrap().starts_with("# seed=7\n"));

        let json = dir.join("t.json");
        write_json(&json, 7, serde_json::json!({"x": 1})).unwrap();
        let text = std::fs::read_to_string(&json).unwrap();
        assert!(text.contains("\"seed\": 7"));
        std::fs::remove_dir_all(&dir).ok();
    }
}
