//! Claim–UI alignment: binary claim extraction from policy text, UI
//! predicate evaluation, the weighted alignment score `A`, and predicate
//! ablations.

mod ablate;
mod extract;
mod pipeline;
mod predicates;
mod score;

pub use ablate::{ablate_all, ablate_predicate, AblationResult, DEFAULT_ABLATION_DRAWS};
pub use extract::{extract_claims, ClaimField, ClaimLexicon, ClaimSet};
pub use pipeline::{score_store, snapshot_features, ScoringConfig};
pub use predicates::{evaluate_predicates, PredicateField, PredicateSet};
pub use score::{
    alignment_score, AlignmentRecord, ImplicationEntry, ImplicationMap, Weight,
};
