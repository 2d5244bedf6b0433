//! Clause similarity: a λ-blend of semantic similarity (cosine over a
//! pluggable text vectorizer, character trigrams by default) and normalized
//! character edit similarity.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::segment::Clause;

/// Blend weight and thresholds for alignment and churn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityConfig {
    /// λ: weight on semantic similarity (1−λ on edit similarity).
    pub semantic_weight: f64,
    /// θ: matched pairs below this similarity are demoted to delete+insert.
    pub match_threshold: f64,
    /// σ: a matched pair with similarity < 1−σ counts as substantially
    /// changed for churn purposes.
    pub substantial_change_threshold: f64,
}

impl Default for SimilarityConfig {
    fn default() -> Self {
        SimilarityConfig {
            semantic_weight: 0.5,
            match_threshold: 0.6,
            substantial_change_threshold: 0.3,
        }
    }
}

impl SimilarityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.semantic_weight) {
            return Err(Error::Validation(format!(
                "semantic_weight must lie in [0,1], got {}",
                self.semantic_weight
            )));
        }
        for (name, v) in [
            ("match_threshold", self.match_threshold),
            (
                "substantial_change_threshold",
                self.substantial_change_threshold,
            ),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Validation(format!(
                    "{name} must lie in (0,1), got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Pluggable text vectorizer for the semantic half of the blend. The
/// default is deterministic character trigrams; embedding backends can
/// implement this trait without touching alignment code.
pub trait TextVectorizer {
    fn vectorize(&self, text: &str) -> BTreeMap<String, f64>;
}

/// Character-trigram term-frequency vectorizer over the lowercased,
/// whitespace-collapsed text. Strings shorter than three characters
/// contribute a single whole-string gram.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrigramVectorizer;

impl TextVectorizer for TrigramVectorizer {
    fn vectorize(&self, text: &str) -> BTreeMap<String, f64> {
        let normalized: Vec<char> = text
            .to_lowercase()
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .chars()
            .collect();
        let mut counts: BTreeMap<String, f64> = BTreeMap::new();
        if normalized.is_empty() {
            return counts;
        }
        if normalized.len() < 3 {
            let gram: String = normalized.iter().collect();
            *counts.entry(gram).or_insert(0.0) += 1.0;
            return counts;
        }
        for window in normalized.windows(3) {
            let gram: String = window.iter().collect();
            *counts.entry(gram).or_insert(0.0) += 1.0;
        }
        counts
    }
}

/// Cosine similarity between sparse vectors, clamped to [0,1].
pub fn cosine(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let mut dot = 0.0;
    for (k, va) in a {
        if let Some(vb) = b.get(k) {
            dot += va * vb;
        }
    }
    let na: f64 = a.values().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(0.0, 1.0)
}

/// Levenshtein distance over characters (two-row dynamic program).
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut curr = vec![0usize; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        curr[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let cost = usize::from(ca != cb);
            curr[j + 1] = (prev[j] + cost).min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// `1 − d(a,b)/max(|a|,|b|)`; two empty strings count as identical.
pub fn edit_similarity(a: &str, b: &str) -> f64 {
    let la = a.chars().count();
    let lb = b.chars().count();
    let denom = la.max(lb);
    if denom == 0 {
        return 1.0;
    }
    1.0 - edit_distance(a, b) as f64 / denom as f64
}

/// Blended text similarity with an explicit vectorizer.
pub fn text_similarity_with(
    vectorizer: &dyn TextVectorizer,
    a: &str,
    b: &str,
    cfg: &SimilarityConfig,
) -> f64 {
    if a == b {
        return 1.0;
    }
    let lambda = cfg.semantic_weight;
    let sem = if lambda == 0.0 {
        0.0 // skip vectorization when it cannot contribute
    } else {
        cosine(&vectorizer.vectorize(a), &vectorizer.vectorize(b))
    };
    let edit = if lambda == 1.0 {
        0.0
    } else {
        edit_similarity(a, b)
    };
    lambda * sem + (1.0 - lambda) * edit
}

/// Blended similarity with the default trigram vectorizer.
pub fn text_similarity(a: &str, b: &str, cfg: &SimilarityConfig) -> f64 {
    text_similarity_with(&TrigramVectorizer, a, b, cfg)
}

/// Clause-level similarity (over clause texts).
pub fn clause_similarity(a: &Clause, b: &Clause, cfg: &SimilarityConfig) -> f64 {
    text_similarity(&a.text, &b.text, cfg)
}
