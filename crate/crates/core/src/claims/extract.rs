//! Binary claim extraction from policy text.
//!
//! Claims are asserted commitments a policy makes about consent handling
//! (opt-in processing, easy rejection, withdrawal, data minimization).
//! Extraction is a deterministic, case-insensitive pattern-lexicon match —
//! the same `*`-gap pattern machinery the taxonomy labeler uses — over the
//! whole policy text and over each labeled clause (whose heading path adds
//! context the raw text already contains, so clause hits are a refinement,
//! never a new source of truth).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{normalize_whitespace, Clause, LexPattern};

const DEFAULT_LEXICON_JSON: &str = include_str!("../../data/claim_lexicon.json");

/// The four binary claims tracked by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClaimField {
    OptIn,
    EasyReject,
    Withdrawal,
    Minimization,
}

impl ClaimField {
    pub const ALL: [ClaimField; 4] = [
        ClaimField::OptIn,
        ClaimField::EasyReject,
        ClaimField::Withdrawal,
        ClaimField::Minimization,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClaimField::OptIn => "opt_in",
            ClaimField::EasyReject => "easy_reject",
            ClaimField::Withdrawal => "withdrawal",
            ClaimField::Minimization => "minimization",
        }
    }
}

impl fmt::Display for ClaimField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClaimField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "opt_in" => Ok(ClaimField::OptIn),
            "easy_reject" => Ok(ClaimField::EasyReject),
            "withdrawal" => Ok(ClaimField::Withdrawal),
            "minimization" => Ok(ClaimField::Minimization),
            other => Err(Error::Validation(format!("unknown claim field {other:?}"))),
        }
    }
}

/// The binary claims asserted by one policy snapshot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimSet {
    pub opt_in: bool,
    pub easy_reject: bool,
    pub withdrawal: bool,
    pub minimization: bool,
}

impl ClaimSet {
    pub fn get(&self, field: ClaimField) -> bool {
        match field {
            ClaimField::OptIn => self.opt_in,
            ClaimField::EasyReject => self.easy_reject,
            ClaimField::Withdrawal => self.withdrawal,
            ClaimField::Minimization => self.minimization,
        }
    }

    pub fn set(&mut self, field: ClaimField, value: bool) {
        match field {
            ClaimField::OptIn => self.opt_in = value,
            ClaimField::EasyReject => self.easy_reject = value,
            ClaimField::Withdrawal => self.withdrawal = value,
            ClaimField::Minimization => self.minimization = value,
        }
    }

    pub fn any(&self) -> bool {
        ClaimField::ALL.iter().any(|&f| self.get(f))
    }

    pub fn count(&self) -> usize {
        ClaimField::ALL.iter().filter(|&&f| self.get(f)).count()
    }
}

/// Trigger-phrase lexicon mapping each claim to its patterns. A claim with
/// no entry (or an empty list) can never fire.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimLexicon {
    rules: BTreeMap<ClaimField, Vec<LexPattern>>,
}

impl ClaimLexicon {
    /// The lexicon shipped with the crate.
    pub fn default_lexicon() -> Self {
        Self::from_json_str(DEFAULT_LEXICON_JSON).expect("bundled claim lexicon must parse")
    }

    /// A lexicon with no patterns at all: extraction always returns the
    /// all-false `ClaimSet`.
    pub fn empty() -> Self {
        ClaimLexicon {
            rules: BTreeMap::new(),
        }
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let raw: BTreeMap<String, Vec<String>> =
            serde_json::from_str(json).map_err(|e| Error::parse("claim lexicon", e))?;
        let mut rules = BTreeMap::new();
        for (key, patterns) in raw {
            let field: ClaimField = key.parse()?;
            rules.insert(field, patterns.into_iter().map(LexPattern::new).collect());
        }
        Ok(ClaimLexicon { rules })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&raw)
    }

    /// Matches the lexicon against one block of free text.
    pub fn extract(&self, text: &str) -> ClaimSet {
        let lower = normalize_whitespace(&text.to_lowercase());
        let mut claims = ClaimSet::default();
        for field in ClaimField::ALL {
            if let Some(patterns) = self.rules.get(&field) {
                if patterns.iter().any(|p| p.matches(&lower)) {
                    claims.set(field, true);
                }
            }
        }
        claims
    }
}

impl Default for ClaimLexicon {
    fn default() -> Self {
        Self::default_lexicon()
    }
}

/// Extracts the claims a policy asserts: a claim holds when its trigger
/// patterns match the whole normalized text or any single clause (with its
/// heading path prepended, mirroring how clauses are taxonomy-labeled).
pub fn extract_claims(policy_text: &str, clauses: &[Clause], lexicon: &ClaimLexicon) -> ClaimSet {
    let mut claims = lexicon.extract(policy_text);
    for clause in clauses {
        let mut scope = clause.heading_path.join(" ");
        scope.push(' ');
        scope.push_str(&clause.text);
        let from_clause = lexicon.extract(&scope);
        for field in ClaimField::ALL {
            if from_clause.get(field) {
                claims.set(field, true);
            }
        }
    }
    claims
}
