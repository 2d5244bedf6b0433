//! Consent-UI analysis: feature extraction from serialized DOMs, weak-rule
//! labeling, the five-class pattern classifier, and its evaluation.

mod classifier;
mod features;
mod gold;
mod metrics;
mod weak;

pub use classifier::{
    feature_vector, train_classifier, PatternClassifier, TrainConfig, BASE_FEATURES,
    FEATURE_SCHEMA,
};
pub use features::{extract_ui_features, ActionClass, ActionLexicon, UiFeatureVector};
pub use gold::{kappa_from_double_coded, read_gold_jsonl, write_gold_jsonl, GoldRecord};
pub use metrics::{
    cohens_kappa, confusion_matrix, evaluate_classifier, evaluate_predictions, macro_average,
    prf_from_confusion, stratified_macro_f1, ClassMetrics, ClassifierMetrics, MetricInterval,
    DEFAULT_BOOTSTRAP_DRAWS,
};
pub use weak::{weak_label, WeakVotes};
