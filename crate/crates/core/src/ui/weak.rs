//! Weak-rule labeling: one hand-written rule per pattern class votes on the
//! extracted features; a strict positive winner becomes a training label,
//! anything else abstains.
//!
//! Rule table:
//! - SCROLL_WALL   ← has_scrollable_container ∧ ¬has_step_indicator
//! - ACCORDION     ← accordion_section_count ≥ 2
//! - MULTI_STEP    ← has_step_indicator ∧ step_count ≥ 2
//! - PRE_TICKED    ← toggles_default_on ≥ 1
//! - REJECT_HIDDEN ← ¬reject_visible_without_scroll ∨ steps_to_reject > 2
//!                   ∨ ¬reject_button_present
//!
//! A feature vector with no banner evidence at all (no controls, no
//! containers, no steps) makes every rule vote 0 and the labeler abstain;
//! without this guard the REJECT_HIDDEN disjunction would fire vacuously on
//! empty trees.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::types::{LabelSource, Pattern, PatternLabel};

use super::features::UiFeatureVector;

/// Votes per pattern (+1 rule fired, −1 rule contradicted, 0 abstain) plus
/// the resolved label when a strict winner exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakVotes {
    pub votes: BTreeMap<Pattern, i8>,
    pub resolved: Option<PatternLabel>,
}

fn has_banner_evidence(f: &UiFeatureVector) -> bool {
    f.has_scrollable_container
        || f.toggle_count > 0
        || f.has_step_indicator
        || f.step_count > 0
        || f.reject_button_present
        || f.accept_button_present
        || f.accordion_section_count > 0
        || f.steps_to_reject.is_some()
        || f.reopen_affordance
}

/// Applies the rule table to one feature vector.
pub fn weak_label(f: &UiFeatureVector) -> WeakVotes {
    let mut votes = BTreeMap::new();
    if !has_banner_evidence(f) {
        for p in Pattern::ALL {
            votes.insert(p, 0i8);
        }
        return WeakVotes {
            votes,
            resolved: None,
        };
    }

    let fired = [
        (
            Pattern::ScrollWall,
            f.has_scrollable_container && !f.has_step_indicator,
        ),
        (Pattern::Accordion, f.accordion_section_count >= 2),
        (
            Pattern::MultiStep,
            f.has_step_indicator && f.step_count >= 2,
        ),
        (Pattern::PreTicked, f.toggles_default_on >= 1),
        (
            Pattern::RejectHidden,
            !f.reject_visible_without_scroll
                || f.steps_to_reject.map(|s| s > 2).unwrap_or(false)
                || !f.reject_button_present,
        ),
    ];
    for (pattern, hit) in fired {
        votes.insert(pattern, if hit { 1 } else { -1 });
    }

    let positives: Vec<Pattern> = votes
        .iter()
        .filter(|(_, &v)| v > 0)
        .map(|(&p, _)| p)
        .collect();
    let resolved = if positives.len() == 1 {
        Some(PatternLabel::new(positives[0], 1.0, LabelSource::WeakRule))
    } else {
        None // tie or nothing fired: abstain
    };
    WeakVotes { votes, resolved }
}
