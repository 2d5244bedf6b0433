//! The claim–UI alignment score.
//!
//! `A = Σ w · 1[claim ⇒ predicate]` over the implication map, with material
//! implication: a term contributes its weight when the claim is false or
//! the predicate is true. Weights are exact rationals and every sum is
//! accumulated in integer arithmetic with a single final division, so `A`
//! is bit-identical under any permutation of the map entries.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::SnapshotKey;

use super::extract::{ClaimField, ClaimSet};
use super::predicates::{PredicateField, PredicateSet};

const DEFAULT_MAP_JSON: &str = include_str!("../../data/implication_map.json");

fn gcd(mut a: i128, mut b: i128) -> i128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.abs()
}

/// A non-negative exact rational weight. Parses from decimal ("0.4") or
/// fraction ("2/5") notation and always stores the reduced form, so equal
/// weights compare equal regardless of spelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Weight {
    num: i64,
    den: i64,
}

impl PartialOrd for Weight {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Weight {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Compare by rational value: a/b vs c/d ⇔ a·d vs c·b (denominators
        // positive by construction).
        let lhs = self.num as i128 * other.den as i128;
        let rhs = other.num as i128 * self.den as i128;
        lhs.cmp(&rhs)
    }
}

impl Weight {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den <= 0 {
            return Err(Error::Validation(format!(
                "weight denominator must be positive, got {den}"
            )));
        }
        if num < 0 {
            return Err(Error::Validation(format!(
                "weight must be non-negative, got {num}/{den}"
            )));
        }
        let g = gcd(num as i128, den as i128).max(1) as i64;
        Ok(Weight {
            num: num / g,
            den: den / g,
        })
    }

    pub fn zero() -> Self {
        Weight { num: 0, den: 1 }
    }

    pub fn one() -> Self {
        Weight { num: 1, den: 1 }
    }

    pub fn numerator(&self) -> i64 {
        self.num
    }

    pub fn denominator(&self) -> i64 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    /// The single lossy step: one floating-point division of the reduced
    /// fraction.
    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            return write!(f, "{}", self.num);
        }
        // Denominators of the form 2^a·5^b have an exact decimal expansion.
        let (mut rest, mut twos, mut fives) = (self.den, 0u32, 0u32);
        while rest % 2 == 0 {
            rest /= 2;
            twos += 1;
        }
        while rest % 5 == 0 {
            rest /= 5;
            fives += 1;
        }
        let digits = twos.max(fives);
        if rest == 1 && digits <= 18 {
            let scale = 10i128.pow(digits) / self.den as i128;
            let scaled = self.num as i128 * scale;
            let int = scaled / 10i128.pow(digits);
            let frac = scaled % 10i128.pow(digits);
            let frac_str = format!("{frac:0width$}", width = digits as usize);
            write!(f, "{int}.{}", frac_str.trim_end_matches('0'))
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl From<Weight> for String {
    fn from(w: Weight) -> String {
        w.to_string()
    }
}

impl FromStr for Weight {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |detail: &str| Error::Validation(format!("invalid weight {s:?}: {detail}"));
        if s.contains(['-', '+']) {
            return Err(bad("weights are unsigned"));
        }
        if let Some((num, den)) = s.split_once('/') {
            let num: i64 = num.trim().parse().map_err(|_| bad("bad numerator"))?;
            let den: i64 = den.trim().parse().map_err(|_| bad("bad denominator"))?;
            return Weight::new(num, den);
        }
        if let Some((int, frac)) = s.split_once('.') {
            let int = if int.is_empty() { "0" } else { int };
            if frac.is_empty() || frac.len() > 18 || !frac.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad("bad fractional part"));
            }
            let int: i64 = int.parse().map_err(|_| bad("bad integer part"))?;
            let frac_val: i64 = frac.parse().map_err(|_| bad("bad fractional part"))?;
            let den = 10i64.pow(frac.len() as u32);
            let num = int
                .checked_mul(den)
                .and_then(|v| v.checked_add(frac_val))
                .ok_or_else(|| bad("out of range"))?;
            return Weight::new(num, den);
        }
        let num: i64 = s.parse().map_err(|_| bad("not a number"))?;
        Weight::new(num, 1)
    }
}

impl TryFrom<String> for Weight {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Exact rational accumulator used for weight sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Rat {
    num: i128,
    den: i128,
}

impl Rat {
    fn zero() -> Self {
        Rat { num: 0, den: 1 }
    }

    fn add(&mut self, w: Weight) {
        let num = self.num * w.den as i128 + w.num as i128 * self.den;
        let den = self.den * w.den as i128;
        let g = gcd(num, den).max(1);
        self.num = num / g;
        self.den = den / g;
    }

    fn is_one(&self) -> bool {
        self.num == self.den
    }

    fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// One scored implication: when the policy asserts `claim`, the UI should
/// satisfy `predicate`; the term is worth `weight`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImplicationEntry {
    pub claim: ClaimField,
    pub predicate: PredicateField,
    pub weight: Weight,
}

/// The full claim→predicate map. Weights must sum to exactly 1 and no
/// predicate may be scored twice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImplicationMap {
    pub entries: Vec<ImplicationEntry>,
}

impl ImplicationMap {
    /// The canonical map shipped with the crate:
    /// reject_all_visible 0.4, default_off 0.3, steps_to_reject_le2 0.2,
    /// reopen_affordance 0.1. The minimization claim is carried in
    /// `ClaimSet` but has no scored entry.
    pub fn canonical() -> Self {
        Self::from_json_str(DEFAULT_MAP_JSON).expect("bundled implication map must validate")
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let map: ImplicationMap =
            serde_json::from_str(json).map_err(|e| Error::parse("implication map", e))?;
        map.validate()?;
        Ok(map)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&raw)
    }

    pub fn validate(&self) -> Result<()> {
        let mut sum = Rat::zero();
        for (i, entry) in self.entries.iter().enumerate() {
            sum.add(entry.weight);
            if self.entries[..i].iter().any(|e| e.predicate == entry.predicate) {
                return Err(Error::Validation(format!(
                    "predicate {} appears more than once in the implication map",
                    entry.predicate
                )));
            }
        }
        if !sum.is_one() {
            return Err(Error::Validation(format!(
                "implication map weights must sum to exactly 1, got {}/{}",
                sum.num, sum.den
            )));
        }
        Ok(())
    }

    pub fn weight_of(&self, predicate: PredicateField) -> Option<Weight> {
        self.entries
            .iter()
            .find(|e| e.predicate == predicate)
            .map(|e| e.weight)
    }

    /// Drops the entry scoring `removed` and redistributes its weight
    /// proportionally across the remaining entries, keeping Σw = 1 exact.
    pub fn without_predicate(&self, removed: PredicateField) -> Result<ImplicationMap> {
        let Some(gone) = self.weight_of(removed) else {
            return Err(Error::NotFound(format!(
                "predicate {removed} is not in the implication map"
            )));
        };
        if self.entries.len() == 1 {
            return Err(Error::Validation(
                "cannot ablate the only implication-map entry".into(),
            ));
        }
        // Remaining mass S = 1 − w_removed; each survivor scales by 1/S.
        let s_num = gone.den - gone.num;
        let s_den = gone.den;
        if s_num == 0 {
            return Err(Error::Validation(format!(
                "predicate {removed} carries all the weight; nothing left to renormalize"
            )));
        }
        let entries = self
            .entries
            .iter()
            .filter(|e| e.predicate != removed)
            .map(|e| {
                let w = Weight::new(
                    e.weight.num.checked_mul(s_den).ok_or_else(|| {
                        Error::Computation("weight renormalization overflow".into())
                    })?,
                    e.weight.den.checked_mul(s_num).ok_or_else(|| {
                        Error::Computation("weight renormalization overflow".into())
                    })?,
                )?;
                Ok(ImplicationEntry {
                    claim: e.claim,
                    predicate: e.predicate,
                    weight: w,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let map = ImplicationMap { entries };
        map.validate()?;
        Ok(map)
    }
}

impl Default for ImplicationMap {
    fn default() -> Self {
        Self::canonical()
    }
}

/// Computes `(A, claim_coverage)` for one snapshot. `A` sums the weights of
/// satisfied implications (claim false or predicate true); `claim_coverage`
/// sums the weights of entries whose claim holds, so a vacuous `A = 1`
/// (coverage 0) is distinguishable from a fully earned one.
pub fn alignment_score(
    claims: &ClaimSet,
    predicates: &PredicateSet,
    map: &ImplicationMap,
) -> Result<(f64, f64)> {
    map.validate()?;
    let mut a = Rat::zero();
    let mut coverage = Rat::zero();
    for entry in &map.entries {
        let claim = claims.get(entry.claim);
        let predicate = predicates.get(entry.predicate);
        if !claim || predicate {
            a.add(entry.weight);
        }
        if claim {
            coverage.add(entry.weight);
        }
    }
    Ok((a.to_f64(), coverage.to_f64()))
}

/// The scored outcome for one snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentRecord {
    #[serde(flatten)]
    pub key: SnapshotKey,
    pub claims: ClaimSet,
    pub predicates: PredicateSet,
    #[serde(rename = "A")]
    pub a: f64,
    pub claim_coverage: f64,
    /// True when the snapshot carried no policy artifact; claims default to
    /// all-false and `A` is vacuously 1.
    pub no_policy: bool,
    pub banner_surfaced: bool,
}

impl AlignmentRecord {
    pub fn compute(
        key: SnapshotKey,
        claims: ClaimSet,
        predicates: PredicateSet,
        no_policy: bool,
        banner_surfaced: bool,
        map: &ImplicationMap,
    ) -> Result<Self> {
        let (a, claim_coverage) = alignment_score(&claims, &predicates, map)?;
        Ok(AlignmentRecord {
            key,
            claims,
            predicates,
            a,
            claim_coverage,
            no_policy,
            banner_surfaced,
        })
    }
}
