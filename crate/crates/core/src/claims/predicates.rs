//! UI predicates: the observable interface facts a claim can be checked
//! against. Derived deterministically from a `UiFeatureVector`; whenever
//! feature data is absent (banner never surfaced, extraction failed) every
//! predicate is false, which makes downstream alignment a conservative
//! lower bound.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ui::UiFeatureVector;

/// The four binary UI predicates paired with claims.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredicateField {
    DefaultOff,
    RejectAllVisible,
    StepsToRejectLe2,
    ReopenAffordance,
}

impl PredicateField {
    pub const ALL: [PredicateField; 4] = [
        PredicateField::DefaultOff,
        PredicateField::RejectAllVisible,
        PredicateField::StepsToRejectLe2,
        PredicateField::ReopenAffordance,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PredicateField::DefaultOff => "default_off",
            PredicateField::RejectAllVisible => "reject_all_visible",
            PredicateField::StepsToRejectLe2 => "steps_to_reject_le2",
            PredicateField::ReopenAffordance => "reopen_affordance",
        }
    }
}

impl fmt::Display for PredicateField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PredicateField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default_off" => Ok(PredicateField::DefaultOff),
            "reject_all_visible" => Ok(PredicateField::RejectAllVisible),
            "steps_to_reject_le2" => Ok(PredicateField::StepsToRejectLe2),
            "reopen_affordance" => Ok(PredicateField::ReopenAffordance),
            other => Err(Error::Validation(format!(
                "unknown predicate field {other:?}"
            ))),
        }
    }
}

/// The predicate truth values observed for one snapshot's consent UI.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateSet {
    pub default_off: bool,
    pub reject_all_visible: bool,
    pub steps_to_reject_le2: bool,
    pub reopen_affordance: bool,
}

impl PredicateSet {
    pub fn get(&self, field: PredicateField) -> bool {
        match field {
            PredicateField::DefaultOff => self.default_off,
            PredicateField::RejectAllVisible => self.reject_all_visible,
            PredicateField::StepsToRejectLe2 => self.steps_to_reject_le2,
            PredicateField::ReopenAffordance => self.reopen_affordance,
        }
    }

    pub fn set(&mut self, field: PredicateField, value: bool) {
        match field {
            PredicateField::DefaultOff => self.default_off = value,
            PredicateField::RejectAllVisible => self.reject_all_visible = value,
            PredicateField::StepsToRejectLe2 => self.steps_to_reject_le2 = value,
            PredicateField::ReopenAffordance => self.reopen_affordance = value,
        }
    }

    /// All predicates true — the ceiling configuration.
    pub fn all_true() -> Self {
        PredicateSet {
            default_off: true,
            reject_all_visible: true,
            steps_to_reject_le2: true,
            reopen_affordance: true,
        }
    }
}

/// Derives the predicate set from extracted UI features. `None` (no banner,
/// no features) yields the all-false set.
pub fn evaluate_predicates(features: Option<&UiFeatureVector>) -> PredicateSet {
    let Some(f) = features else {
        return PredicateSet::default();
    };
    PredicateSet {
        default_off: f.toggle_count > 0 && f.toggles_default_on == 0,
        reject_all_visible: f.reject_button_present && f.reject_visible_without_scroll,
        steps_to_reject_le2: matches!(f.steps_to_reject, Some(n) if n <= 2),
        reopen_affordance: f.reopen_affordance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn absent_features_force_all_false() {
        assert_eq!(evaluate_predicates(None), PredicateSet::default());
    }

    #[test]
    fn visible_reject_at_step_one() {
        let f = UiFeatureVector {
            reject_button_present: true,
            reject_visible_without_scroll: true,
            steps_to_reject: Some(1),
            ..Default::default()
        };
        let p = evaluate_predicates(Some(&f));
        assert!(p.reject_all_visible && p.steps_to_reject_le2);
        assert!(!p.default_off && !p.reopen_affordance);
    }

    #[test]
    fn default_on_toggles_fail_default_off() {
        let f = UiFeatureVector {
            toggle_count: 3,
            toggles_default_on: 3,
            ..Default::default()
        };
        assert!(!evaluate_predicates(Some(&f)).default_off);
        let g = UiFeatureVector {
            toggle_count: 3,
            toggles_default_on: 0,
            ..Default::default()
        };
        assert!(evaluate_predicates(Some(&g)).default_off);
    }

    #[test]
    fn no_toggles_means_no_default_off_evidence() {
        assert!(!evaluate_predicates(Some(&UiFeatureVector::default())).default_off);
    }

    #[test]
    fn three_step_reject_fails_le2() {
        let f = UiFeatureVector {
            steps_to_reject: Some(3),
            ..Default::default()
        };
        assert!(!evaluate_predicates(Some(&f)).steps_to_reject_le2);
    }

    #[test]
    fn predicate_field_round_trips_through_strings() {
        for field in PredicateField::ALL {
            assert_eq!(field.as_str().parse::<PredicateField>().unwrap(), field);
        }
        assert!("visible_reject".parse::<PredicateField>().is_err());
    }
}
