//! Version-to-version clause alignment and churn.
//!
//! Matching maximizes total blended similarity over one-to-one pairs, then
//! demotes pairs below the match threshold θ to deletion+insertion. Churn
//! is the share of clauses that substantially differ between versions:
//! `(|matches with sim < 1−σ| + |deletions| + |insertions|) / max(|prev|,
//! |next|, 1)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::types::Taxonomy;

use super::assign::max_similarity_assignment;
use super::segment::Clause;
use super::similarity::{text_similarity_with, SimilarityConfig, TextVectorizer, TrigramVectorizer};

/// One matched clause pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClauseMatch {
    pub prev_index: usize,
    pub next_index: usize,
    pub similarity: f64,
}

/// The matched/deleted/inserted structure between two policy versions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseAlignment {
    pub matches: Vec<ClauseMatch>,
    pub deletions: Vec<usize>,
    pub insertions: Vec<usize>,
    pub churn: f64,
}

impl ClauseAlignment {
    pub fn total_similarity(&self) -> f64 {
        self.matches.iter().map(|m| m.similarity).sum()
    }
}

/// Aligns two clause lists with an explicit vectorizer.
pub fn align_versions_with(
    vectorizer: &dyn TextVectorizer,
    prev: &[Clause],
    next: &[Clause],
    cfg: &SimilarityConfig,
) -> Result<ClauseAlignment> {
    cfg.validate()?;
    let sim: Vec<Vec<f64>> = prev
        .iter()
        .map(|a| {
            next.iter()
                .map(|b| text_similarity_with(vectorizer, &a.text, &b.text, cfg))
                .collect()
        })
        .collect();
    let assignment = if prev.is_empty() {
        Vec::new()
    } else {
        max_similarity_assignment(&sim)
    };

    let mut matches = Vec::new();
    let mut deletions = Vec::new();
    let mut matched_next = vec![false; next.len()];
    for (i, assigned) in assignment.iter().enumerate() {
        match assigned {
            Some(j) if sim[i][*j] >= cfg.match_threshold => {
                matches.push(ClauseMatch {
                    prev_index: i,
                    next_index: *j,
                    similarity: sim[i][*j],
                });
                matched_next[*j] = true;
            }
            // Below θ (or padded): the pair is a delete+insert, not a match.
            _ => deletions.push(i),
        }
    }
    let insertions: Vec<usize> = (0..next.len()).filter(|&j| !matched_next[j]).collect();

    let changed = matches
        .iter()
        .filter(|m| m.similarity < 1.0 - cfg.substantial_change_threshold)
        .count();
    let denom = prev.len().max(next.len()).max(1);
    let churn = ((changed + deletions.len() + insertions.len()) as f64 / denom as f64)
        .clamp(0.0, 1.0);

    Ok(ClauseAlignment {
        matches,
        deletions,
        insertions,
        churn,
    })
}

/// Aligns two clause lists with the default trigram vectorizer.
pub fn align_versions(
    prev: &[Clause],
    next: &[Clause],
    cfg: &SimilarityConfig,
) -> Result<ClauseAlignment> {
    align_versions_with(&TrigramVectorizer, prev, next, cfg)
}

/// Churn restricted to each taxonomy label: both sides are filtered to the
/// label's clauses and re-aligned. Labels absent from both sides are not
/// reported.
pub fn taxonomy_churn(
    prev: &[Clause],
    next: &[Clause],
    cfg: &SimilarityConfig,
) -> Result<BTreeMap<Taxonomy, f64>> {
    let mut out = BTreeMap::new();
    for taxonomy in Taxonomy::ALL {
        let p: Vec<Clause> = prev
            .iter()
            .filter(|c| c.taxonomy == taxonomy)
            .cloned()
            .collect();
        let n: Vec<Clause> = next
            .iter()
            .filter(|c| c.taxonomy == taxonomy)
            .cloned()
            .collect();
        if p.is_empty() && n.is_empty() {
            continue;
        }
        let alignment = align_versions(&p, &n, cfg)?;
        out.insert(taxonomy, alignment.churn);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clause(text: &str) -> Clause {
        Clause::new(vec![], text.into())
    }

    fn clauses(texts: &[&str]) -> Vec<Clause> {
        texts.iter().map(|t| clause(t)).collect()
    }

    #[test]
    fn identical_lists_have_zero_churn() {
        let p = clauses(&[
            "We keep data 30 days.",
            "We share nothing with partners.",
            "Contact us at privacy@example.com.",
            "You may withdraw consent.",
        ]);
        let a = align_versions(&p, &p, &SimilarityConfig::default()).unwrap();
        assert_eq!(a.matches.len(), 4);
        assert!(a.matches.iter().all(|m| m.similarity == 1.0));
        assert!(a.deletions.is_empty() && a.insertions.is_empty());
        assert_eq!(a.churn, 0.0);
    }

    #[test]
    fn disjoint_lists_have_full_churn() {
        let p = clauses(&["Alpha beta gamma delta epsilon.", "Zeta eta theta iota."]);
        let n = clauses(&["Completely unrelated wording here.", "Nothing matches at all."]);
        let a = align_versions(&p, &n, &SimilarityConfig::default()).unwrap();
        assert!(a.matches.is_empty());
        assert_eq!(a.deletions, vec![0, 1]);
        assert_eq!(a.insertions, vec![0, 1]);
        assert_eq!(a.churn, 1.0);
    }

    #[test]
    fn empty_both_sides_is_zero_churn() {
        let a = align_versions(&[], &[], &SimilarityConfig::default()).unwrap();
        assert_eq!(a.churn, 0.0);
        assert!(a.matches.is_empty());
    }

    #[test]
    fn one_sided_lists_are_pure_insertions_or_deletions() {
        let p = clauses(&["We keep data 30 days."]);
        let a = align_versions(&p, &[], &SimilarityConfig::default()).unwrap();
        assert_eq!(a.deletions, vec![0]);
        assert_eq!(a.churn, 1.0);
        let b = align_versions(&[], &p, &SimilarityConfig::default()).unwrap();
        assert_eq!(b.insertions, vec![0]);
        assert_eq!(b.churn, 1.0);
    }

    #[test]
    fn partition_invariant_holds() {
        let p = clauses(&[
            "We retain data for 30 days.",
            "We share aggregate statistics with partners.",
            "Totally unique old clause with rare words.",
        ]);
        let n = clauses(&[
            "We retain data for 45 days.",
            "Brand new clause about cookies and banners.",
            "We share aggregate statistics with partners.",
        ]);
        let a = align_versions(&p, &n, &SimilarityConfig::default()).unwrap();
        let mut prev_seen: Vec<usize> = a.matches.iter().map(|m| m.prev_index).collect();
        prev_seen.extend(&a.deletions);
        prev_seen.sort_unstable();
        assert_eq!(prev_seen, vec![0, 1, 2]);
        let mut next_seen: Vec<usize> = a.matches.iter().map(|m| m.next_index).collect();
        next_seen.extend(&a.insertions);
        next_seen.sort_unstable();
        assert_eq!(next_seen, vec![0, 1, 2]);
        assert!(a
            .matches
            .iter()
            .all(|m| m.similarity >= SimilarityConfig::default().match_threshold));
    }

    #[test]
    fn churn_is_symmetric_for_equal_sizes() {
        let p = clauses(&[
            "We retain data for 30 days.",
            "We share aggregates with partners.",
            "You can contact the privacy office.",
        ]);
        let n = clauses(&[
            "We retain data for 90 days.",
            "Entirely different text about other things.",
            "You can contact the privacy office.",
        ]);
        let cfg = SimilarityConfig::default();
        let ab = align_versions(&p, &n, &cfg).unwrap();
        let ba = align_versions(&n, &p, &cfg).unwrap();
        assert!((ab.churn - ba.churn).abs() < 1e-12);
    }

    #[test]
    fn taxonomy_restriction_isolates_churn() {
        let mut prev = clauses(&["We retain data for 30 days.", "We share data with partners."]);
        prev[0].taxonomy = Taxonomy::Retention;
        prev[1].taxonomy = Taxonomy::Sharing;
        let mut next = clauses(&[
            "We retain data for 30 days.",
            "Wholly rewritten disclosure text appears here.",
        ]);
        next[0].taxonomy = Taxonomy::Retention;
        next[1].taxonomy = Taxonomy::Sharing;
        let by_tax = taxonomy_churn(&prev, &next, &SimilarityConfig::default()).unwrap();
        assert_eq!(by_tax[&Taxonomy::Retention], 0.0);
        assert_eq!(by_tax[&Taxonomy::Sharing], 1.0);
        assert!(!by_tax.contains_key(&Taxonomy::Contact));
    }
}
