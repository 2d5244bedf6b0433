//! Per-artifact coverage accounting with honest denominators.
//!
//! Every rate is carried as a numerator/denominator pair; strata with an
//! empty denominator report no rate rather than a fabricated zero.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::types::Region;

use super::SnapshotRecord;

/// One coverage fraction kept as exact counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageCell {
    pub numerator: u64,
    pub denominator: u64,
}

impl CoverageCell {
    pub fn add(&mut self, present: bool) {
        self.denominator += 1;
        if present {
            self.numerator += 1;
        }
    }

    /// `None` when the stratum is empty (rate undefined).
    pub fn rate(&self) -> Option<f64> {
        if self.denominator == 0 {
            None
        } else {
            Some(self.numerator as f64 / self.denominator as f64)
        }
    }
}

/// Store-wide coverage: banner surfacing, page loads, and each artifact,
/// overall and stratified by region.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub snapshots: u64,
    pub banner: CoverageCell,
    pub load_ok: CoverageCell,
    pub banner_by_region: BTreeMap<Region, CoverageCell>,
    pub artifacts: BTreeMap<String, CoverageCell>,
    pub artifacts_by_region: BTreeMap<String, BTreeMap<Region, CoverageCell>>,
}

/// Tallies coverage over a record set. Artifact denominators count every
/// snapshot, so a missing file lowers the rate instead of shrinking the base.
pub fn coverage_of<'a>(records: impl Iterator<Item = &'a SnapshotRecord>) -> CoverageReport {
    let mut report = CoverageReport::default();
    let mut artifact_names: Vec<String> = Vec::new();
    let mut recs: Vec<&SnapshotRecord> = Vec::new();
    for rec in records {
        for name in rec.artifacts.keys() {
            if !artifact_names.contains(name) {
                artifact_names.push(name.clone());
            }
        }
        recs.push(rec);
    }
    artifact_names.sort();

    for rec in recs {
        report.snapshots += 1;
        report.banner.add(rec.banner_surfaced);
        report.load_ok.add(rec.load_ok);
        report
            .banner_by_region
            .entry(rec.key.region)
            .or_default()
            .add(rec.banner_surfaced);
        for name in &artifact_names {
            let present = rec.artifacts.contains_key(name);
            report
                .artifacts
                .entry(name.clone())
                .or_default()
                .add(present);
            report
                .artifacts_by_region
                .entry(name.clone())
                .or_default()
                .entry(rec.key.region)
                .or_default()
                .add(present);
        }
    }
    report
}
