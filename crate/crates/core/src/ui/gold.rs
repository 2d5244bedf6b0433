//! Gold-set carrier: JSON-lines of hand-labeled snapshots with per-coder
//! codes. The double-coded subset drives inter-annotator agreement.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Pattern;

use super::metrics::cohens_kappa;

/// One gold-labeled snapshot. `label` is the adjudicated class; `codes`
/// carries raw per-coder assignments for agreement analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoldRecord {
    pub site_id: String,
    pub month: u32,
    pub label: Pattern,
    #[serde(default, skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    pub codes: std::collections::BTreeMap<String, Pattern>,
}

pub fn read_gold_jsonl(path: &Path) -> Result<Vec<GoldRecord>> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (lineno, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: GoldRecord = serde_json::from_str(line)
            .map_err(|e| Error::parse(format!("{}:{}", path.display(), lineno + 1), e))?;
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::Validation(format!(
            "gold set {} contains no records",
            path.display()
        )));
    }
    Ok(records)
}

pub fn write_gold_jsonl(path: &Path, records: &[GoldRecord]) -> Result<()> {
    let mut out = String::new();
    for rec in records {
        out.push_str(
            &serde_json::to_string(rec).map_err(|e| Error::parse("gold record", e))?,
        );
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Cohen's κ over the double-coded subset: for each record with at least
/// two coders, the two lowest coder ids (sorted) contribute one label pair.
/// Returns `None` when no record is double-coded.
pub fn kappa_from_double_coded(records: &[GoldRecord]) -> Result<Option<f64>> {
    let mut first = Vec::new();
    let mut second = Vec::new();
    for rec in records {
        if rec.codes.len() >= 2 {
            let mut coders: Vec<&String> = rec.codes.keys().collect();
            coders.sort();
            first.push(rec.codes[coders[0]]);
            second.push(rec.codes[coders[1]]);
        }
    }
    if first.is_empty() {
        return Ok(None);
    }
    cohens_kappa(&first, &second).map(Some)
}
