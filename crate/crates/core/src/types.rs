//! Shared domain types: regions, verticals, consent-UI pattern classes, the
//! clause taxonomy, and snapshot keys.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Jurisdiction bucket a site was crawled under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    #[serde(rename = "EU")]
    Eu,
    #[serde(rename = "US_CA")]
    UsCa,
    #[serde(rename = "OTHER")]
    Other,
}

impl Region {
    pub const ALL: [Region; 3] = [Region::Eu, Region::UsCa, Region::Other];

    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Eu => "EU",
            Region::UsCa => "US_CA",
            Region::Other => "OTHER",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Region {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "EU" => Ok(Region::Eu),
            "US_CA" | "US-CA" => Ok(Region::UsCa),
            "OTHER" => Ok(Region::Other),
            other => Err(Error::Validation(format!("unknown region {other:?}"))),
        }
    }
}

/// Content vertical of the sampling frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Vertical {
    News,
    Retail,
    Social,
    Video,
}

impl Vertical {
    pub const ALL: [Vertical; 4] = [
        Vertical::News,
        Vertical::Retail,
        Vertical::Social,
        Vertical::Video,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Vertical::News => "NEWS",
            Vertical::Retail => "RETAIL",
            Vertical::Social => "SOCIAL",
            Vertical::Video => "VIDEO",
        }
    }
}

impl fmt::Display for Vertical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Vertical {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "NEWS" => Ok(Vertical::News),
            "RETAIL" => Ok(Vertical::Retail),
            "SOCIAL" => Ok(Vertical::Social),
            "VIDEO" => Ok(Vertical::Video),
            other => Err(Error::Validation(format!("unknown vertical {other:?}"))),
        }
    }
}

/// Five-class consent-UI pattern. Order matches the reporting convention
/// (Scroll-Wall, Accordion, Multi-Step, Pre-ticked, Reject-Hidden) and is
/// relied on by index-based tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Pattern {
    ScrollWall,
    Accordion,
    MultiStep,
    PreTicked,
    RejectHidden,
}

impl Pattern {
    pub const COUNT: usize = 5;
    pub const ALL: [Pattern; 5] = [
        Pattern::ScrollWall,
        Pattern::Accordion,
        Pattern::MultiStep,
        Pattern::PreTicked,
        Pattern::RejectHidden,
    ];

    pub fn index(&self) -> usize {
        match self {
            Pattern::ScrollWall => 0,
            Pattern::Accordion => 1,
            Pattern::MultiStep => 2,
            Pattern::PreTicked => 3,
            Pattern::RejectHidden => 4,
        }
    }

    pub fn from_index(i: usize) -> Option<Pattern> {
        Pattern::ALL.get(i).copied()
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Pattern::ScrollWall => "SCROLL_WALL",
            Pattern::Accordion => "ACCORDION",
            Pattern::MultiStep => "MULTI_STEP",
            Pattern::PreTicked => "PRE_TICKED",
            Pattern::RejectHidden => "REJECT_HIDDEN",
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SCROLL_WALL" | "SCROLL-WALL" => Ok(Pattern::ScrollWall),
            "ACCORDION" => Ok(Pattern::Accordion),
            "MULTI_STEP" | "MULTI-STEP" => Ok(Pattern::MultiStep),
            "PRE_TICKED" | "PRE-TICKED" => Ok(Pattern::PreTicked),
            "REJECT_HIDDEN" | "REJECT-HIDDEN" => Ok(Pattern::RejectHidden),
            other => Err(Error::Validation(format!("unknown pattern {other:?}"))),
        }
    }
}

/// Clause taxonomy. `Other` is the fallback for clauses no labeling rule
/// claims (boilerplate, greetings, markup leftovers).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Taxonomy {
    Purpose,
    Retention,
    Sharing,
    LegalBasis,
    Rights,
    Contact,
    Other,
}

impl Taxonomy {
    pub const ALL: [Taxonomy; 7] = [
        Taxonomy::Purpose,
        Taxonomy::Retention,
        Taxonomy::Sharing,
        Taxonomy::LegalBasis,
        Taxonomy::Rights,
        Taxonomy::Contact,
        Taxonomy::Other,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Taxonomy::Purpose => "PURPOSE",
            Taxonomy::Retention => "RETENTION",
            Taxonomy::Sharing => "SHARING",
            Taxonomy::LegalBasis => "LEGAL_BASIS",
            Taxonomy::Rights => "RIGHTS",
            Taxonomy::Contact => "CONTACT",
            Taxonomy::Other => "OTHER",
        }
    }
}

impl fmt::Display for Taxonomy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Taxonomy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "PURPOSE" => Ok(Taxonomy::Purpose),
            "RETENTION" => Ok(Taxonomy::Retention),
            "SHARING" => Ok(Taxonomy::Sharing),
            "LEGAL_BASIS" | "LEGALBASIS" => Ok(Taxonomy::LegalBasis),
            "RIGHTS" => Ok(Taxonomy::Rights),
            "CONTACT" => Ok(Taxonomy::Contact),
            "OTHER" => Ok(Taxonomy::Other),
            other => Err(Error::Validation(format!("unknown taxonomy {other:?}"))),
        }
    }
}

/// Identity of one site-month observation plus the site attributes that are
/// constant across months (region, vertical, list rank).
///
/// Uniqueness within a store is on `(site_id, month)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SnapshotKey {
    pub site_id: String,
    pub month: u32,
    pub region: Region,
    pub vertical: Vertical,
    pub rank: u32,
}

impl SnapshotKey {
    /// The `(site_id, month)` pair that keys store lookups.
    pub fn id(&self) -> (&str, u32) {
        (&self.site_id, self.month)
    }

    pub fn validate(&self) -> Result<()> {
        if self.site_id.trim().is_empty() {
            return Err(Error::Validation("site_id must be non-empty".into()));
        }
        if self.rank == 0 {
            return Err(Error::Validation(format!(
                "rank must be positive for site {}",
                self.site_id
            )));
        }
        Ok(())
    }
}

impl fmt::Display for SnapshotKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@m{}", self.site_id, self.month)
    }
}

/// Provenance of a pattern label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LabelSource {
    WeakRule,
    Classifier,
    Gold,
}

/// One resolved consent-UI pattern label with confidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternLabel {
    pub pattern: Pattern,
    pub confidence: f64,
    pub source: LabelSource,
}

impl PatternLabel {
    pub fn new(pattern: Pattern, confidence: f64, source: LabelSource) -> Self {
        PatternLabel {
            pattern,
            confidence,
            source,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_roundtrip_index() {
        for (i, p) in Pattern::ALL.iter().enumerate() {
            assert_eq!(p.index(), i);
            assert_eq!(Pattern::from_index(i), Some(*p));
        }
        assert_eq!(Pattern::from_index(5), None);
    }

    #[test]
    fn enum_strings_parse_back() {
        for r in Region::ALL {
            assert_eq!(r.as_str().parse::<Region>().unwrap(), r);
        }
        for v in Vertical::ALL {
            assert_eq!(v.as_str().parse::<Vertical>().unwrap(), v);
        }
        for p in Pattern::ALL {
            assert_eq!(p.as_str().parse::<Pattern>().unwrap(), p);
        }
        for t in Taxonomy::ALL {
            assert_eq!(t.as_str().parse::<Taxonomy>().unwrap(), t);
        }
    }

    #[test]
    fn key_validation() {
        let key = SnapshotKey {
            site_id: "example.org".into(),
            month: 3,
            region: Region::Eu,
            vertical: Vertical::News,
            rank: 12,
        };
        assert!(key.validate().is_ok());
        let bad = SnapshotKey { rank: 0, ..key };
        assert!(bad.validate().is_err());
    }
}
