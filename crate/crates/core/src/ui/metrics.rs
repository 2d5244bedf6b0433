//! Classifier evaluation: confusion matrices, per-class and macro
//! precision/recall/F1 with percentile-bootstrap intervals, and Cohen's κ.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{bootstrap_indices, derive_seed, percentile_interval};
use crate::types::Pattern;

use super::classifier::PatternClassifier;
use super::features::UiFeatureVector;

pub const DEFAULT_BOOTSTRAP_DRAWS: usize = 1000;
const CI_LEVEL: f64 = 0.95;

/// Point estimate plus a 95% percentile-bootstrap interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricInterval {
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub pattern: Pattern,
    pub gold_count: u64,
    pub precision: MetricInterval,
    pub recall: MetricInterval,
    pub f1: MetricInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierMetrics {
    pub n: usize,
    pub bootstrap_draws: usize,
    pub seed: u64,
    /// Rows = gold class, columns = predicted class.
    pub confusion: [[u64; 5]; 5],
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: MetricInterval,
    pub macro_recall: MetricInterval,
    pub macro_f1: MetricInterval,
}

/// Counts (gold, predicted) pairs into a 5×5 matrix.
pub fn confusion_matrix(pairs: &[(Pattern, Pattern)]) -> [[u64; 5]; 5] {
    let mut cm = [[0u64; 5]; 5];
    for (gold, pred) in pairs {
        cm[gold.index()][pred.index()] += 1;
    }
    cm
}

/// Per-class (precision, recall, f1) plus their macro averages, all from a
/// confusion matrix. Zero denominators yield zero, deterministically.
pub fn prf_from_confusion(cm: &[[u64; 5]; 5]) -> ([(f64, f64, f64); 5], (f64, f64, f64)) {
    let mut per_class = [(0.0f64, 0.0f64, 0.0f64); 5];
    for k in 0..5 {
        let tp = cm[k][k] as f64;
        let col: f64 = (0..5).map(|g| cm[g][k] as f64).sum();
        let row: f64 = (0..5).map(|p| cm[k][p] as f64).sum();
        let precision = if col > 0.0 { tp / col } else { 0.0 };
        let recall = if row > 0.0 { tp / row } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_class[k] = (precision, recall, f1);
    }
    let macro_p = per_class.iter().map(|m| m.0).sum::<f64>() / 5.0;
    let macro_r = per_class.iter().map(|m| m.1).sum::<f64>() / 5.0;
    let macro_f = per_class.iter().map(|m| m.2).sum::<f64>() / 5.0;
    (per_class, (macro_p, macro_r, macro_f))
}

/// Unweighted mean (macro average) of a metric list.
pub fn macro_average(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Metrics with bootstrap intervals from raw (gold, predicted) pairs.
pub fn evaluate_predictions(
    pairs: &[(Pattern, Pattern)],
    bootstrap_draws: usize,
    seed: u64,
) -> Result<ClassifierMetrics> {
    if pairs.is_empty() {
        return Err(Error::Validation("empty gold set".into()));
    }
    let cm = confusion_matrix(pairs);
    let (point, (macro_p, macro_r, macro_f)) = prf_from_confusion(&cm);

    // Bootstrap: resample pairs with replacement, one derived seed per draw.
    let mut draws: Vec<[f64; 18]> = Vec::with_capacity(bootstrap_draws);
    for d in 0..bootstrap_draws {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, d as u64));
        let idx = bootstrap_indices(&mut rng, pairs.len());
        let resample: Vec<(Pattern, Pattern)> = idx.iter().map(|&i| pairs[i]).collect();
        let (pc, (mp, mr, mf)) = prf_from_confusion(&confusion_matrix(&resample));
        let mut row = [0.0f64; 18];
        for k in 0..5 {
            row[3 * k] = pc[k].0;
            row[3 * k + 1] = pc[k].1;
            row[3 * k + 2] = pc[k].2;
        }
        row[15] = mp;
        row[16] = mr;
        row[17] = mf;
        draws.push(row);
    }
    let interval = |slot: usize, estimate: f64| -> MetricInterval {
        let series: Vec<f64> = draws.iter().map(|row| row[slot]).collect();
        let (lo, hi) = percentile_interval(&series, CI_LEVEL)
            .unwrap_or((estimate, estimate));
        MetricInterval { estimate, lo, hi }
    };

    let per_class = Pattern::ALL
        .iter()
        .enumerate()
        .map(|(k, &pattern)| ClassMetrics {
            pattern,
            gold_count: (0..5).map(|p| cm[k][p]).sum(),
            precision: interval(3 * k, point[k].0),
            recall: interval(3 * k + 1, point[k].1),
            f1: interval(3 * k + 2, point[k].2),
        })
        .collect();

    Ok(ClassifierMetrics {
        n: pairs.len(),
        bootstrap_draws,
        seed,
        confusion: cm,
        per_class,
        macro_precision: interval(15, macro_p),
        macro_recall: interval(16, macro_r),
        macro_f1: interval(17, macro_f),
    })
}

/// Runs the model over a gold set and evaluates.
pub fn evaluate_classifier(
    model: &PatternClassifier,
    gold: &[(UiFeatureVector, Pattern)],
    bootstrap_draws: usize,
    seed: u64,
) -> Result<ClassifierMetrics> {
    let pairs: Vec<(Pattern, Pattern)> = gold
        .iter()
        .map(|(f, label)| (*label, model.predict(f).pattern))
        .collect();
    evaluate_predictions(&pairs, bootstrap_draws, seed)
}

/// Macro-F1 stratified by an arbitrary grouping key (e.g. CMP vendor).
pub fn stratified_macro_f1(
    pairs: &[(String, Pattern, Pattern)],
) -> BTreeMap<String, f64> {
    let mut groups: BTreeMap<String, Vec<(Pattern, Pattern)>> = BTreeMap::new();
    for (key, gold, pred) in pairs {
        groups.entry(key.clone()).or_default().push((*gold, *pred));
    }
    groups
        .into_iter()
        .map(|(key, pairs)| {
            let (_, (_, _, macro_f)) = prf_from_confusion(&confusion_matrix(&pairs));
            (key, macro_f)
        })
        .collect()
}

/// Cohen's κ with marginal-product chance agreement. The degenerate case
/// (both coders use one identical label throughout, `p_e = 1`) is defined
/// as κ = 1.
pub fn cohens_kappa<T: Ord + Clone>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Validation(format!(
            "label lists differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Validation("empty label lists".into()));
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64;
    let p_o = agree / n;
    let mut counts_a: BTreeMap<&T, f64> = BTreeMap::new();
    let mut counts_b: BTreeMap<&T, f64> = BTreeMap::new();
    for x in a {
        *counts_a.entry(x).or_insert(0.0) += 1.0;
    }
    for y in b {
        *counts_b.entry(y).or_insert(0.0) += 1.0;
    }
    let p_e: f64 = counts_a
        .iter()
        .map(|(label, ca)| ca / n * counts_b.get(label).copied().unwrap_or(0.0) / n)
        .sum();
    if (1.0 - p_e).abs() < 1e-15 {
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}
