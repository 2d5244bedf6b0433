//! Predicate ablation: how much the alignment score of a panel depends on
//! each scored predicate. Dropping an entry redistributes its weight
//! proportionally (see `ImplicationMap::without_predicate`), both scores
//! are recomputed per row, and the shift is summarized as the median
//! difference in percentage points with a paired percentile-bootstrap CI
//! plus Cliff's δ.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{bootstrap_indices, cliffs_delta, derive_seed, median, percentile_interval};

use super::predicates::PredicateField;
use super::score::{alignment_score, AlignmentRecord, ImplicationMap, Weight};

pub const DEFAULT_ABLATION_DRAWS: usize = 1000;

/// The effect of removing one predicate from the map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationResult {
    pub removed: PredicateField,
    /// Weight the removed entry carried in the original map.
    pub weight: Weight,
    /// median(A_ablated) − median(A_original), in percentage points;
    /// negative means the predicate was propping scores up.
    pub delta_median_pp: f64,
    /// 95% percentile-bootstrap interval for `delta_median_pp`.
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Cliff's δ of the original scores against the ablated ones: positive
    /// when the original distribution tends larger (the usual companion of
    /// a negative `delta_median_pp`).
    pub cliffs_delta: f64,
}

/// Ablates `removed` over a scored panel. Scores are recomputed from the
/// stored claims/predicates with both maps so the comparison never mixes
/// scoring configurations.
pub fn ablate_predicate(
    panel: &[AlignmentRecord],
    removed: PredicateField,
    map: &ImplicationMap,
    seed: u64,
    draws: usize,
) -> Result<AblationResult> {
    if panel.is_empty() {
        return Err(Error::Validation("cannot ablate an empty panel".into()));
    }
    let weight = map.weight_of(removed).ok_or_else(|| {
        Error::NotFound(format!("predicate {removed} is not in the implication map"))
    })?;
    let ablated_map = map.without_predicate(removed)?;

    let mut original = Vec::with_capacity(panel.len());
    let mut ablated = Vec::with_capacity(panel.len());
    for row in panel {
        original.push(alignment_score(&row.claims, &row.predicates, map)?.0);
        ablated.push(alignment_score(&row.claims, &row.predicates, &ablated_map)?.0);
    }

    let point = delta_median_pp(&original, &ablated);
    let mut deltas = Vec::with_capacity(draws);
    for d in 0..draws {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, d as u64));
        let idx = bootstrap_indices(&mut rng, panel.len());
        let orig_draw: Vec<f64> = idx.iter().map(|&i| original[i]).collect();
        let abl_draw: Vec<f64> = idx.iter().map(|&i| ablated[i]).collect();
        deltas.push(delta_median_pp(&orig_draw, &abl_draw));
    }
    let (ci_lo, ci_hi) = percentile_interval(&deltas, 0.95)
        .ok_or_else(|| Error::Computation("bootstrap produced no draws".into()))?;

    Ok(AblationResult {
        removed,
        weight,
        delta_median_pp: point,
        ci_lo,
        ci_hi,
        cliffs_delta: cliffs_delta(&original, &ablated)?,
    })
}

/// Ablates every scored predicate, ordered by descending original weight
/// (ties by predicate declaration order).
pub fn ablate_all(
    panel: &[AlignmentRecord],
    map: &ImplicationMap,
    seed: u64,
    draws: usize,
) -> Result<Vec<AblationResult>> {
    let mut order: Vec<(Weight, usize, PredicateField)> = map
        .entries
        .iter()
        .map(|e| {
            let pos = PredicateField::ALL
                .iter()
                .position(|&p| p == e.predicate)
                .unwrap_or(PredicateField::ALL.len());
            (e.weight, pos, e.predicate)
        })
        .collect();
    order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    order
        .into_iter()
        .map(|(_, _, predicate)| ablate_predicate(panel, predicate, map, seed, draws))
        .collect()
}

fn delta_median_pp(original: &[f64], ablated: &[f64]) -> f64 {
    let m_orig = median(original).unwrap_or(f64::NAN);
    let m_abl = median(ablated).unwrap_or(f64::NAN);
    (m_abl - m_orig) * 100.0
}
