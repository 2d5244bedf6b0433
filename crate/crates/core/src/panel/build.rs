//! Site×month panel assembly and the descriptive series computed from it:
//! weighted pattern prevalence and row-normalized transition matrices.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::claims::{AlignmentRecord, PredicateSet};
use crate::error::{Error, Result};
use crate::store::SnapshotStore;
use crate::types::{Pattern, PatternLabel, Region, Vertical};

/// One observation: a site in a month, with whatever artifacts that
/// snapshot yielded. Optional fields are `None` exactly when the underlying
/// artifact is absent — the panel never imputes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelRow {
    pub site_id: String,
    pub month: u32,
    pub region: Region,
    pub vertical: Vertical,
    pub rank: u32,
    /// Consent-UI pattern label, when one was assigned.
    pub pattern: Option<PatternLabel>,
    /// Claim–UI alignment score; absent when the snapshot had no policy.
    #[serde(rename = "A")]
    pub a: Option<f64>,
    /// Clause churn against the previous month; absent for first months and
    /// non-consecutive gaps.
    pub churn: Option<f64>,
    /// Observed UI predicates; absent when no banner was captured.
    pub predicates: Option<PredicateSet>,
    pub banner_surfaced: bool,
    /// Analysis weight (default 1; rank weighting and IPW rescale it).
    pub weight: f64,
}

impl PanelRow {
    pub fn pattern_kind(&self) -> Option<Pattern> {
        self.pattern.as_ref().map(|l| l.pattern)
    }

    /// The reject-visibility response used by the event-study analyses.
    pub fn reject_visible(&self) -> Option<f64> {
        self.predicates
            .as_ref()
            .map(|p| if p.reject_all_visible { 1.0 } else { 0.0 })
    }
}

/// Joins the store with per-snapshot component outputs. One row per
/// snapshot in (site_id, month) order; duplicate keys in any input are
/// conflicts — silence would quietly drop data.
pub fn build_panel(
    store: &SnapshotStore,
    alignments: &[AlignmentRecord],
    labels: &BTreeMap<(String, u32), PatternLabel>,
    churn: &BTreeMap<(String, u32), f64>,
) -> Result<Vec<PanelRow>> {
    let mut by_key: BTreeMap<(String, u32), &AlignmentRecord> = BTreeMap::new();
    for rec in alignments {
        let key = (rec.key.site_id.clone(), rec.key.month);
        if by_key.insert(key, rec).is_some() {
            return Err(Error::Conflict(format!(
                "duplicate alignment record for {}/{}",
                rec.key.site_id, rec.key.month
            )));
        }
    }
    let mut rows = Vec::with_capacity(store.len());
    for snap in store.records() {
        let key = (snap.key.site_id.clone(), snap.key.month);
        let alignment = by_key.get(&key);
        let a = alignment.and_then(|r| if r.no_policy { None } else { Some(r.a) });
        let predicates = alignment.and_then(|r| {
            if r.banner_surfaced {
                Some(r.predicates)
            } else {
                None
            }
        });
        rows.push(PanelRow {
            site_id: snap.key.site_id.clone(),
            month: snap.key.month,
            region: snap.key.region,
            vertical: snap.key.vertical,
            rank: snap.key.rank,
            pattern: labels.get(&key).cloned(),
            a,
            churn: churn.get(&key).copied(),
            predicates,
            banner_surfaced: snap.banner_surfaced,
            weight: 1.0,
        });
    }
    Ok(rows)
}

/// Weighted per-pattern shares among banner-surfaced, labeled rows, one
/// entry per month that has any such rows. Shares sum to 1 per month.
pub fn prevalence_series(panel: &[PanelRow]) -> BTreeMap<u32, [f64; Pattern::COUNT]> {
    let mut sums: BTreeMap<u32, ([f64; Pattern::COUNT], f64)> = BTreeMap::new();
    for row in panel {
        if !row.banner_surfaced {
            continue;
        }
        let Some(pattern) = row.pattern_kind() else {
            continue;
        };
        let entry = sums.entry(row.month).or_insert(([0.0; Pattern::COUNT], 0.0));
        entry.0[pattern.index()] += row.weight;
        entry.1 += row.weight;
    }
    sums.into_iter()
        .filter(|(_, (_, total))| *total > 0.0)
        .map(|(month, (mass, total))| {
            let mut shares = [0.0; Pattern::COUNT];
            for (share, m) in shares.iter_mut().zip(mass) {
                *share = m / total;
            }
            (month, shares)
        })
        .collect()
}

/// Pattern transition counts over consecutive labeled months, with
/// row-normalized probabilities. A row whose counts are all zero has no
/// probability row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub counts: [[u64; Pattern::COUNT]; Pattern::COUNT],
    pub probs: [Option<[f64; Pattern::COUNT]>; Pattern::COUNT],
}

impl TransitionMatrix {
    pub fn from_counts(counts: [[u64; Pattern::COUNT]; Pattern::COUNT]) -> Self {
        let mut probs = [None; Pattern::COUNT];
        for (row, out) in counts.iter().zip(probs.iter_mut()) {
            let total: u64 = row.iter().sum();
            if total > 0 {
                let mut p = [0.0; Pattern::COUNT];
                for (pj, &c) in p.iter_mut().zip(row) {
                    *pj = c as f64 / total as f64;
                }
                *out = Some(p);
            }
        }
        TransitionMatrix { counts, probs }
    }

    pub fn total_pairs(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

/// Tallies pattern transitions over strictly consecutive (m, m+1) labeled
/// month pairs per site and row-normalizes.
pub fn transition_matrix(panel: &[PanelRow]) -> TransitionMatrix {
    let mut by_site: BTreeMap<&str, Vec<(u32, Pattern)>> = BTreeMap::new();
    for row in panel {
        if let Some(pattern) = row.pattern_kind() {
            by_site
                .entry(row.site_id.as_str())
                .or_default()
                .push((row.month, pattern));
        }
    }
    let mut counts = [[0u64; Pattern::COUNT]; Pattern::COUNT];
    for seq in by_site.values_mut() {
        seq.sort_unstable_by_key(|&(month, _)| month);
        for pair in seq.windows(2) {
            let (m0, from) = pair[0];
            let (m1, to) = pair[1];
            if m1 == m0 + 1 {
                counts[from.index()][to.index()] += 1;
            }
        }
    }
    TransitionMatrix::from_counts(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::LabelSource;

    fn label(p: Pattern) -> PatternLabel {
        PatternLabel::new(p, 1.0, LabelSource::Gold)
    }

    fn bare_row(site: &str, month: u32, pattern: Option<Pattern>) -> PanelRow {
        PanelRow {
            site_id: site.into(),
            month,
            region: Region::Eu,
            vertical: Vertical::News,
            rank: 1,
            pattern: pattern.map(label),
            a: None,
            churn: None,
            predicates: None,
            banner_surfaced: pattern.is_some(),
            weight: 1.0,
        }
    }

    #[test]
    fn prevalence_hand_count() {
        let rows = vec![
            bare_row("a", 1, Some(Pattern::ScrollWall)),
            bare_row("b", 1, Some(Pattern::ScrollWall)),
            bare_row("c", 1, Some(Pattern::Accordion)),
            bare_row("d", 1, Some(Pattern::Accordion)),
            bare_row("e", 1, None),
        ];
        let series = prevalence_series(&rows);
        let shares = series[&1];
        assert_eq!(shares, [0.5, 0.5, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn prevalence_all_one_class_and_empty_month() {
        let rows = vec![
            bare_row("a", 3, Some(Pattern::PreTicked)),
            bare_row("b", 3, Some(Pattern::PreTicked)),
            bare_row("a", 4, None),
        ];
        let series = prevalence_series(&rows);
        assert_eq!(series[&3][Pattern::PreTicked.index()], 1.0);
        assert!(!series.contains_key(&4));
    }

    #[test]
    fn prevalence_respects_weights() {
        let mut heavy = bare_row("a", 1, Some(Pattern::ScrollWall));
        heavy.weight = 3.0;
        let light = bare_row("b", 1, Some(Pattern::Accordion));
        let series = prevalence_series(&[heavy, light]);
        let shares = series[&1];
        assert!((shares[Pattern::ScrollWall.index()] - 0.75).abs() < 1e-12);
        assert!((shares[Pattern::Accordion.index()] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn transitions_count_consecutive_pairs_only() {
        let rows = vec![
            bare_row("a", 1, Some(Pattern::ScrollWall)),
            bare_row("a", 2, Some(Pattern::Accordion)),
            // Gap: months 2 → 4 must not form a pair.
            bare_row("a", 4, Some(Pattern::Accordion)),
            bare_row("b", 1, Some(Pattern::ScrollWall)),
            bare_row("b", 2, Some(Pattern::ScrollWall)),
        ];
        let t = transition_matrix(&rows);
        assert_eq!(t.total_pairs(), 2);
        assert_eq!(
            t.counts[Pattern::ScrollWall.index()][Pattern::Accordion.index()],
            1
        );
        assert_eq!(
            t.counts[Pattern::ScrollWall.index()][Pattern::ScrollWall.index()],
            1
        );
        let sw = t.probs[Pattern::ScrollWall.index()].unwrap();
        assert!((sw.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(t.probs[Pattern::PreTicked.index()].is_none());
    }

    #[test]
    fn constant_label_site_concentrates_mass() {
        let rows: Vec<PanelRow> = (1..=6)
            .map(|m| bare_row("a", m, Some(Pattern::MultiStep)))
            .collect();
        let t = transition_matrix(&rows);
        let i = Pattern::MultiStep.index();
        assert_eq!(t.counts[i][i], 5);
        assert_eq!(t.probs[i].unwrap()[i], 1.0);
    }

    #[test]
    fn transitions_match_brute_force_on_random_sequences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        let mut rows = Vec::new();
        let mut expected = [[0u64; Pattern::COUNT]; Pattern::COUNT];
        for s in 0..30 {
            let months = 4 + rng.gen_range(0..6);
            let mut seq = Vec::new();
            for m in 1..=months {
                let p = Pattern::from_index(rng.gen_range(0..Pattern::COUNT)).unwrap();
                seq.push(p);
                rows.push(bare_row(&format!("s{s}"), m, Some(p)));
            }
            for w in seq.windows(2) {
                expected[w[0].index()][w[1].index()] += 1;
            }
        }
        assert_eq!(transition_matrix(&rows).counts, expected);
    }
}
