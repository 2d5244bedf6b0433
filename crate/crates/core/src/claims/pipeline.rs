//! End-to-end claim–UI scoring over a snapshot store: segment and label the
//! policy, extract claims, derive UI predicates from the recorded consent
//! DOM and flow, and emit one `AlignmentRecord` per snapshot.

use crate::error::Result;
use crate::policy::{segment_policy, TaxonomyLexicon};
use crate::store::SnapshotStore;
use crate::ui::{extract_ui_features, ActionLexicon, UiFeatureVector};

use super::extract::{extract_claims, ClaimLexicon, ClaimSet};
use super::predicates::evaluate_predicates;
use super::score::{AlignmentRecord, ImplicationMap};

/// Everything `score_store` needs besides the store itself. `Default`
/// wires up the bundled lexicons and the canonical map.
#[derive(Debug, Clone, Default)]
pub struct ScoringConfig {
    pub map: ImplicationMap,
    pub claim_lexicon: ClaimLexicon,
    pub action_lexicon: ActionLexicon,
    pub taxonomy_lexicon: TaxonomyLexicon,
}

/// Scores every snapshot in the store, in (site_id, month) order.
///
/// Missing policy → all-false claims flagged `no_policy` (vacuously
/// `A = 1`, coverage 0). Missing banner/DOM → absent features, so every
/// predicate is false — the conservative lower bound.
pub fn score_store(store: &SnapshotStore, config: &ScoringConfig) -> Result<Vec<AlignmentRecord>> {
    let mut out = Vec::with_capacity(store.len());
    for rec in store.records() {
        let (claims, no_policy) = match store.load_policy_text(rec)? {
            Some(text) => {
                let clauses = config
                    .taxonomy_lexicon
                    .label_all(segment_policy(&text)?);
                (
                    extract_claims(&text, &clauses, &config.claim_lexicon),
                    false,
                )
            }
            None => (ClaimSet::default(), true),
        };
        let features = snapshot_features(store, rec, &config.action_lexicon)?;
        let predicates = evaluate_predicates(features.as_ref());
        out.push(AlignmentRecord::compute(
            rec.key.clone(),
            claims,
            predicates,
            no_policy,
            rec.banner_surfaced,
            &config.map,
        )?);
    }
    Ok(out)
}

/// Loads and extracts the UI feature vector for one snapshot, or `None`
/// when the banner never surfaced / no DOM was captured.
pub fn snapshot_features(
    store: &SnapshotStore,
    rec: &crate::store::SnapshotRecord,
    action_lexicon: &ActionLexicon,
) -> Result<Option<UiFeatureVector>> {
    if !rec.banner_surfaced {
        return Ok(None);
    }
    let Some(dom) = store.load_consent_dom(rec)? else {
        return Ok(None);
    };
    let flow = store.load_flow_steps(rec)?;
    let screenshot = store.load_screenshot_features(rec)?;
    Ok(Some(extract_ui_features(
        &dom,
        flow.as_deref(),
        action_lexicon,
        screenshot,
    )))
}
