//! Five-class pattern classifier: multinomial logistic regression trained
//! by deterministic full-batch gradient descent.
//!
//! Determinism contract: training sorts examples into a canonical order
//! (label, then feature bytes), initializes weights at zero, and runs a
//! fixed iteration budget — so the same data and seed produce a
//! bit-identical model regardless of input order. Feature standardization
//! is folded into the exported weights, keeping the model file
//! self-contained.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{LabelSource, Pattern, PatternLabel};

use super::features::UiFeatureVector;

/// Version tag of the numeric feature layout below.
pub const FEATURE_SCHEMA: &str = "ui-features/v1";

/// Count of documented (non-screenshot) feature slots.
pub const BASE_FEATURES: usize = 15;

/// Flattens a feature vector into the numeric layout consumed by the
/// classifier. Layout (`ui-features/v1`):
/// `[scrollable, toggle_count, toggles_default_on, step_indicator,
/// step_count, reject_present, reject_visible, accept_present,
/// accept_primary, reject_primary, accordion_sections, steps_to_reject
/// present, steps_to_reject value, reopen_affordance, screenshot present,
/// screenshot[0..dim] zero-filled]`.
pub fn feature_vector(f: &UiFeatureVector, screenshot_dim: usize) -> Vec<f64> {
    let mut x = Vec::with_capacity(BASE_FEATURES + screenshot_dim);
    x.push(f.has_scrollable_container as u8 as f64);
    x.push(f.toggle_count as f64);
    x.push(f.toggles_default_on as f64);
    x.push(f.has_step_indicator as u8 as f64);
    x.push(f.step_count as f64);
    x.push(f.reject_button_present as u8 as f64);
    x.push(f.reject_visible_without_scroll as u8 as f64);
    x.push(f.accept_button_present as u8 as f64);
    x.push(f.accept_primary_styled as u8 as f64);
    x.push(f.reject_primary_styled as u8 as f64);
    x.push(f.accordion_section_count as f64);
    x.push(f.steps_to_reject.is_some() as u8 as f64);
    x.push(f.steps_to_reject.unwrap_or(0) as f64);
    x.push(f.reopen_affordance as u8 as f64);
    x.push(f.screenshot_features.is_some() as u8 as f64);
    let shot = f.screenshot_features.as_deref().unwrap_or(&[]);
    for j in 0..screenshot_dim {
        x.push(shot.get(j).copied().unwrap_or(0.0));
    }
    x
}

/// Gradient-descent budget. Defaults are fixed so results are reproducible
/// without tuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub iterations: usize,
    pub learning_rate: f64,
    pub l2_penalty: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 400,
            learning_rate: 0.5,
            l2_penalty: 1e-4,
        }
    }
}

/// Trained multinomial logistic model mapping the flattened features to a
/// probability over the five pattern classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternClassifier {
    pub schema: String,
    pub seed: u64,
    pub screenshot_dim: usize,
    /// K×D weight matrix, one row per pattern in declaration order.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl PatternClassifier {
    /// Class probabilities for one feature vector (sums to 1).
    pub fn probabilities(&self, f: &UiFeatureVector) -> Vec<f64> {
        let x = feature_vector(f, self.screenshot_dim);
        let mut logits = vec![0.0f64; Pattern::COUNT];
        for (k, logit) in logits.iter_mut().enumerate() {
            let mut z = self.bias[k];
            for (j, xj) in x.iter().enumerate() {
                z += self.weights[k][j] * xj;
            }
            *logit = z;
        }
        softmax(&logits)
    }

    /// Argmax prediction; ties break toward the lower class index.
    pub fn predict(&self, f: &UiFeatureVector) -> PatternLabel {
        let probs = self.probabilities(f);
        let mut best = 0usize;
        for k in 1..probs.len() {
            if probs[k] > probs[best] {
                best = k;
            }
        }
        PatternLabel::new(
            Pattern::from_index(best).expect("class index in range"),
            probs[best],
            LabelSource::Classifier,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::parse("model serialization", e))
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let model: PatternClassifier =
            serde_json::from_str(json).map_err(|e| Error::parse("model file", e))?;
        if model.schema != FEATURE_SCHEMA {
            return Err(Error::Validation(format!(
                "model schema {:?} does not match {FEATURE_SCHEMA:?}",
                model.schema
            )));
        }
        let d = BASE_FEATURES + model.screenshot_dim;
        if model.weights.len() != Pattern::COUNT
            || model.bias.len() != Pattern::COUNT
            || model.weights.iter().any(|row| row.len() != d)
        {
            return Err(Error::Validation("model weight shape mismatch".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&raw)
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Trains the classifier. Requires at least one example per class.
pub fn train_classifier(
    examples: &[(UiFeatureVector, Pattern)],
    seed: u64,
    cfg: &TrainConfig,
) -> Result<PatternClassifier> {
    if examples.is_empty() {
        return Err(Error::Validation("training set is empty".into()));
    }
    let mut class_counts = [0usize; Pattern::COUNT];
    for (_, label) in examples {
        class_counts[label.index()] += 1;
    }
    if let Some(missing) = Pattern::ALL.iter().find(|p| class_counts[p.index()] == 0) {
        return Err(Error::Validation(format!(
            "class {missing} has zero training examples"
        )));
    }

    let screenshot_dim = examples
        .iter()
        .filter_map(|(f, _)| f.screenshot_features.as_ref().map(Vec::len))
        .max()
        .unwrap_or(0);
    let d = BASE_FEATURES + screenshot_dim;

    // Canonical ordering: by label, then by raw feature bytes. This makes
    // the floating-point summation order — and hence the model bits —
    // independent of caller ordering.
    let mut rows: Vec<(Vec<f64>, usize)> = examples
        .iter()
        .map(|(f, label)| (feature_vector(f, screenshot_dim), label.index()))
        .collect();
    rows.sort_by(|a, b| {
        a.1.cmp(&b.1).then_with(|| {
            let ab: Vec<u64> = a.0.iter().map(|v| v.to_bits()).collect();
            let bb: Vec<u64> = b.0.iter().map(|v| v.to_bits()).collect();
            ab.cmp(&bb)
        })
    });
    let n = rows.len();

    // Column standardization (population sd; constant columns untouched).
    let mut means = vec![0.0f64; d];
    for (x, _) in &rows {
        for (j, v) in x.iter().enumerate() {
            means[j] += v;
        }
    }
    for m in &mut means {
        *m /= n as f64;
    }
    let mut sds = vec![0.0f64; d];
    for (x, _) in &rows {
        for (j, v) in x.iter().enumerate() {
            sds[j] += (v - means[j]) * (v - means[j]);
        }
    }
    for s in &mut sds {
        *s = (*s / n as f64).sqrt();
        if *s < 1e-12 {
            *s = 1.0;
        }
    }
    for (x, _) in &mut rows {
        for (j, v) in x.iter_mut().enumerate() {
            *v = (*v - means[j]) / sds[j];
        }
    }

    let k = Pattern::COUNT;
    let mut w = vec![vec![0.0f64; d]; k];
    let mut b = vec![0.0f64; k];
    let mut grad_w = vec![vec![0.0f64; d]; k];
    let mut grad_b = vec![0.0f64; k];
    for _ in 0..cfg.iterations {
        for row in grad_w.iter_mut() {
            row.iter_mut().for_each(|g| *g = 0.0);
        }
        grad_b.iter_mut().for_each(|g| *g = 0.0);
        for (x, y) in &rows {
            let mut logits = vec![0.0f64; k];
            for (c, logit) in logits.iter_mut().enumerate() {
                let mut z = b[c];
                for (j, xj) in x.iter().enumerate() {
                    z += w[c][j] * xj;
                }
                *logit = z;
            }
            let p = softmax(&logits);
            for c in 0..k {
                let err = p[c] - f64::from(c == *y);
                for (j, xj) in x.iter().enumerate() {
                    grad_w[c][j] += err * xj;
                }
                grad_b[c] += err;
            }
        }
        let scale = cfg.learning_rate / n as f64;
        for c in 0..k {
            for j in 0..d {
                w[c][j] -= scale * grad_w[c][j] + cfg.learning_rate * cfg.l2_penalty * w[c][j];
            }
            b[c] -= scale * grad_b[c];
        }
    }

    // Fold standardization into the exported parameters so inference runs
    // on raw features: w' = w/s, b' = b − Σ w·μ/s.
    let mut weights = vec![vec![0.0f64; d]; k];
    let mut bias = vec![0.0f64; k];
    for c in 0..k {
        let mut shift = 0.0;
        for j in 0..d {
            weights[c][j] = w[c][j] / sds[j];
            shift += w[c][j] * means[j] / sds[j];
        }
        bias[c] = b[c] - shift;
    }

    Ok(PatternClassifier {
        schema: FEATURE_SCHEMA.to_string(),
        seed,
        screenshot_dim,
        weights,
        bias,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example(pattern: Pattern) -> UiFeatureVector {
        // One crisply separated prototype per class.
        match pattern {
            Pattern::ScrollWall => UiFeatureVector {
                has_scrollable_container: true,
                reject_button_present: true,
                reject_visible_without_scroll: true,
                accept_button_present: true,
                steps_to_reject: Some(1),
                ..UiFeatureVector::default()
            },
            Pattern::Accordion => UiFeatureVector {
                accordion_section_count: 3,
                reject_button_present: true,
                reject_visible_without_scroll: true,
                accept_button_present: true,
                steps_to_reject: Some(1),
                ..UiFeatureVector::default()
            },
            Pattern::MultiStep => UiFeatureVector {
                has_step_indicator: true,
                step_count: 3,
                reject_button_present: true,
                reject_visible_without_scroll: true,
                accept_button_present: true,
                steps_to_reject: Some(2),
                ..UiFeatureVector::default()
            },
            Pattern::PreTicked => UiFeatureVector {
                toggle_count: 4,
                toggles_default_on: 4,
                reject_button_present: true,
                reject_visible_without_scroll: true,
                accept_button_present: true,
                steps_to_reject: Some(1),
                ..UiFeatureVector::default()
            },
            Pattern::RejectHidden => UiFeatureVector {
                accept_button_present: true,
                accept_primary_styled: true,
                ..UiFeatureVector::default()
            },
        }
    }

    fn training_set() -> Vec<(UiFeatureVector, Pattern)> {
        Pattern::ALL
            .iter()
            .flat_map(|&p| std::iter::repeat_with(move || (example(p), p)).take(4))
            .collect()
    }

    #[test]
    fn prototypes_are_memorized() {
        let model = train_classifier(&training_set(), 7, &TrainConfig::default()).unwrap();
        for p in Pattern::ALL {
            let pred = model.predict(&example(p));
            assert_eq!(pred.pattern, p, "prototype for {p}");
            assert!(pred.confidence > 0.5);
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let model = train_classifier(&training_set(), 7, &TrainConfig::default()).unwrap();
        let probs = model.probabilities(&example(Pattern::Accordion));
        let total: f64 = probs.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(probs.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn training_is_order_invariant_and_bit_identical() {
        let data = training_set();
        let mut shuffled = data.clone();
        shuffled.reverse();
        shuffled.swap(0, 7);
        let a = train_classifier(&data, 42, &TrainConfig::default()).unwrap();
        let b = train_classifier(&shuffled, 42, &TrainConfig::default()).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn missing_class_is_rejected() {
        let data: Vec<_> = training_set()
            .into_iter()
            .filter(|(_, p)| *p != Pattern::PreTicked)
            .collect();
        assert!(train_classifier(&data, 1, &TrainConfig::default()).is_err());
    }

    #[test]
    fn json_roundtrip_preserves_predictions() {
        let model = train_classifier(&training_set(), 9, &TrainConfig::default()).unwrap();
        let json = model.to_json().unwrap();
        let back = PatternClassifier::from_json(&json).unwrap();
        assert_eq!(model, back);
        let wrong_schema = json.replace(FEATURE_SCHEMA, "ui-features/v0");
        assert!(PatternClassifier::from_json(&wrong_schema).is_err());
    }

    #[test]
    fn screenshot_features_pad_and_truncate() {
        let mut with_shot = training_set();
        for (f, _) in &mut with_shot {
            f.screenshot_features = Some(vec![1.0, 2.0]);
        }
        let model = train_classifier(&with_shot, 3, &TrainConfig::default()).unwrap();
        assert_eq!(model.screenshot_dim, 2);
        // Longer/shorter vectors at inference are truncated/zero-filled.
        let mut probe = example(Pattern::ScrollWall);
        probe.screenshot_features = Some(vec![1.0, 2.0, 3.0, 4.0]);
        let _ = model.probabilities(&probe); // must not panic
        probe.screenshot_features = Some(vec![1.0]);
        let _ = model.probabilities(&probe);
    }

    #[test]
    fn separable_two_class_subset_fits_perfectly() {
        // Only SCROLL_WALL vs PRE_TICKED examples, padded with one of each
        // other class to satisfy the coverage precondition.
        let data = training_set();
        let model = train_classifier(&data, 11, &TrainConfig::default()).unwrap();
        let sw = model.predict(&example(Pattern::ScrollWall));
        let pt = model.predict(&example(Pattern::PreTicked));
        assert_eq!(sw.pattern, Pattern::ScrollWall);
        assert_eq!(pt.pattern, Pattern::PreTicked);
    }
}
