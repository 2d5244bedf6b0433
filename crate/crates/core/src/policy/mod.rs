//! Policy-text processing: clause segmentation, taxonomy labeling,
//! cross-version alignment, and monthly churn series.

mod align;
mod assign;
mod segment;
mod series;
mod similarity;
mod taxonomy;

pub use align::{align_versions, align_versions_with, taxonomy_churn, ClauseAlignment, ClauseMatch};
pub use assign::{assignment_total, max_similarity_assignment};
pub use segment::{
    evaluate_boundaries, normalize_whitespace, segment_policy, split_sentences, BoundaryEval,
    Clause,
};
pub use series::{align_site_months, monthly_churn_series, ChurnPoint, MonthPairAlignment};
pub use similarity::{
    clause_similarity, cosine, edit_distance, edit_similarity, text_similarity,
    text_similarity_with, SimilarityConfig, TextVectorizer, TrigramVectorizer,
};
pub use taxonomy::{LexPattern, TaxonomyLexicon};
