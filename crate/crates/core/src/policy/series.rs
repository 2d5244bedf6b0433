//! Monthly churn series per site, with audit-grade alignment dumps.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::SnapshotStore;
use crate::types::Taxonomy;

use super::align::{align_versions, taxonomy_churn, ClauseAlignment};
use super::segment::segment_policy;
use super::similarity::SimilarityConfig;
use super::taxonomy::TaxonomyLexicon;

/// Churn landing at `month` (the later month of a consecutive pair).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChurnPoint {
    pub month: u32,
    pub churn: f64,
    pub by_taxonomy: BTreeMap<Taxonomy, f64>,
}

/// Full alignment between one consecutive month pair of a site, referencing
/// stable clause ids so audits can replay the match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthPairAlignment {
    pub site_id: String,
    pub prev_month: u32,
    pub next_month: u32,
    pub prev_clause_ids: Vec<String>,
    pub next_clause_ids: Vec<String>,
    pub alignment: ClauseAlignment,
    pub by_taxonomy: BTreeMap<Taxonomy, f64>,
}

impl MonthPairAlignment {
    pub fn churn_point(&self) -> ChurnPoint {
        ChurnPoint {
            month: self.next_month,
            churn: self.alignment.churn,
            by_taxonomy: self.by_taxonomy.clone(),
        }
    }
}

/// Aligns every consecutive policy-bearing month pair `(m, m+1)` of one
/// site. Month gaps are skipped, never bridged: per-artifact denominators
/// stay honest. Errors: unknown site, fewer than two policy snapshots.
pub fn align_site_months(
    store: &SnapshotStore,
    site_id: &str,
    lexicon: &TaxonomyLexicon,
    cfg: &SimilarityConfig,
) -> Result<Vec<MonthPairAlignment>> {
    cfg.validate()?;
    let months = store.months_for(site_id);
    if months.is_empty() {
        return Err(Error::NotFound(format!("site {site_id} not in store")));
    }
    // Load and segment every policy-bearing month once.
    let mut segmented = BTreeMap::new();
    for &month in &months {
        let rec = store
            .get(site_id, month)
            .expect("months_for returned an indexed month");
        if let Some(text) = store.load_policy_text(rec)? {
            let clauses = lexicon.label_all(segment_policy(&text)?);
            segmented.insert(month, clauses);
        }
    }
    if segmented.len() < 2 {
        return Err(Error::Validation(format!(
            "site {site_id} has {} policy-bearing snapshots; need ≥ 2",
            segmented.len()
        )));
    }

    let mut out = Vec::new();
    for (&prev_month, prev_clauses) in &segmented {
        let next_month = prev_month + 1;
        let Some(next_clauses) = segmented.get(&next_month) else {
            continue; // gap: no pair, no imputation
        };
        let alignment = align_versions(prev_clauses, next_clauses, cfg)?;
        let by_taxonomy = taxonomy_churn(prev_clauses, next_clauses, cfg)?;
        out.push(MonthPairAlignment {
            site_id: site_id.to_string(),
            prev_month,
            next_month,
            prev_clause_ids: prev_clauses.iter().map(|c| c.clause_id.clone()).collect(),
            next_clause_ids: next_clauses.iter().map(|c| c.clause_id.clone()).collect(),
            alignment,
            by_taxonomy,
        });
    }
    Ok(out)
}

/// The churn series for one site: one point per consecutive policy pair.
pub fn monthly_churn_series(
    store: &SnapshotStore,
    site_id: &str,
    lexicon: &TaxonomyLexicon,
    cfg: &SimilarityConfig,
) -> Result<Vec<ChurnPoint>> {
    Ok(align_site_months(store, site_id, lexicon, cfg)?
        .iter()
        .map(MonthPairAlignment::churn_point)
        .collect())
}
