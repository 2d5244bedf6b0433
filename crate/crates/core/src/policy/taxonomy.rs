//! Keyword-rule taxonomy labeling for policy clauses.
//!
//! The lexicon is a JSON map `taxonomy → [patterns]`. A pattern is a
//! lowercase substring, optionally with `*` gaps ("keep * for" matches any
//! text containing "keep" then "for", in order). A clause is labeled with
//! the taxonomy collecting the most pattern hits over its text and heading
//! path; ties resolve in declared taxonomy order, and zero hits fall back
//! to `OTHER`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Taxonomy;

use super::segment::Clause;

const DEFAULT_LEXICON_JSON: &str = include_str!("../../data/taxonomy_lexicon.json");

/// One lowercase keyword pattern, possibly with `*` gaps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LexPattern {
    raw: String,
}

impl LexPattern {
    pub fn new(raw: impl Into<String>) -> Self {
        LexPattern {
            raw: raw.into().to_lowercase(),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.raw
    }

    /// True when every `*`-separated part occurs in order in `text_lower`.
    pub fn matches(&self, text_lower: &str) -> bool {
        let mut cursor = 0usize;
        for part in self.raw.split('*') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            match text_lower[cursor..].find(part) {
                Some(at) => cursor += at + part.len(),
                None => return false,
            }
        }
        true
    }
}

/// The full taxonomy lexicon. `OTHER` carries no patterns; it is the
/// fallback label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaxonomyLexicon {
    rules: BTreeMap<Taxonomy, Vec<LexPattern>>,
}

impl TaxonomyLexicon {
    /// The lexicon shipped with the crate.
    pub fn default_lexicon() -> Self {
        Self::from_json_str(DEFAULT_LEXICON_JSON)
            .expect("bundled taxonomy lexicon must parse")
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let raw: BTreeMap<String, Vec<String>> = serde_json::from_str(json)
            .map_err(|e| Error::parse("taxonomy lexicon", e))?;
        let mut rules = BTreeMap::new();
        for (key, patterns) in raw {
            let taxonomy: Taxonomy = key.parse()?;
            if taxonomy == Taxonomy::Other {
                return Err(Error::Validation(
                    "OTHER is the fallback label and cannot carry patterns".into(),
                ));
            }
            rules.insert(
                taxonomy,
                patterns.into_iter().map(LexPattern::new).collect(),
            );
        }
        Ok(TaxonomyLexicon { rules })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&raw)
    }

    /// Labels free text: most pattern hits wins, ties resolve in `Taxonomy`
    /// declaration order, no hits → `OTHER`.
    pub fn label_text(&self, text: &str) -> Taxonomy {
        let lower = text.to_lowercase();
        let mut best = Taxonomy::Other;
        let mut best_hits = 0usize;
        for taxonomy in Taxonomy::ALL {
            let Some(patterns) = self.rules.get(&taxonomy) else {
                continue;
            };
            let hits = patterns.iter().filter(|p| p.matches(&lower)).count();
            if hits > best_hits {
                best = taxonomy;
                best_hits = hits;
            }
        }
        best
    }

    /// Labels a clause from its text plus heading context.
    pub fn label_clause(&self, clause: &Clause) -> Taxonomy {
        let mut scope = clause.heading_path.join(" ");
        scope.push(' ');
        scope.push_str(&clause.text);
        self.label_text(&scope)
    }

    /// Applies labels in place and returns the clauses.
    pub fn label_all(&self, mut clauses: Vec<Clause>) -> Vec<Clause> {
        for clause in &mut clauses {
            clause.taxonomy = self.label_clause(clause);
        }
        clauses
    }
}

impl Default for TaxonomyLexicon {
    fn default() -> Self {
        Self::default_lexicon()
    }
}
