//! Deterministic UI-feature extraction from the serialized consent DOM and
//! the recorded interaction flow.
//!
//! Extraction is rule-based and documented feature by feature; every rule
//! reads only the serialized tree/flow, never live pages. Button labels are
//! classified against a configurable action lexicon, with reject patterns
//! taking precedence over reopen and accept (so "Continue without
//! accepting" is a reject action even though it contains "continue").

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bundle::{DomNode, FlowStep};
use crate::error::{Error, Result};

const DEFAULT_ACTION_LEXICON_JSON: &str = include_str!("../../data/action_lexicon.json");

/// Semantic class of an interactive control, inferred from its label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ActionClass {
    Reject,
    Reopen,
    Accept,
}

/// Lowercase label substrings per action class. Order of precedence when
/// classifying is fixed: reject, then reopen, then accept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionLexicon {
    pub reject: Vec<String>,
    pub reopen: Vec<String>,
    pub accept: Vec<String>,
}

impl ActionLexicon {
    pub fn default_lexicon() -> Self {
        serde_json::from_str(DEFAULT_ACTION_LEXICON_JSON)
            .expect("bundled action lexicon must parse")
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&raw).map_err(|e| Error::parse("action lexicon", e))
    }

    /// Classifies a control label; `None` for neutral labels.
    pub fn classify(&self, label: &str) -> Option<ActionClass> {
        let lower = label.to_lowercase();
        let hit = |pats: &[String]| pats.iter().any(|p| lower.contains(p.as_str()));
        if hit(&self.reject) {
            Some(ActionClass::Reject)
        } else if hit(&self.reopen) {
            Some(ActionClass::Reopen)
        } else if hit(&self.accept) {
            Some(ActionClass::Accept)
        } else {
            None
        }
    }
}

impl Default for ActionLexicon {
    fn default() -> Self {
        Self::default_lexicon()
    }
}

/// Documented consent-UI features plus the optional externally computed
/// screenshot feature vector.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct UiFeatureVector {
    pub has_scrollable_container: bool,
    pub toggle_count: u32,
    pub toggles_default_on: u32,
    pub has_step_indicator: bool,
    pub step_count: u32,
    pub reject_button_present: bool,
    pub reject_visible_without_scroll: bool,
    pub accept_button_present: bool,
    pub accept_primary_styled: bool,
    pub reject_primary_styled: bool,
    pub accordion_section_count: u32,
    /// 1-based index of the first flow step offering a reject action;
    /// absent when reject is never reachable in the recorded flow.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps_to_reject: Option<u32>,
    /// A reopen/settings affordance exists in some flow step.
    pub reopen_affordance: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub screenshot_features: Option<Vec<f64>>,
}

fn class_tokens(node: &DomNode) -> impl Iterator<Item = &str> {
    node.attr("class")
        .unwrap_or("")
        .split_whitespace()
}

fn style_normalized(node: &DomNode) -> String {
    node.attr("style")
        .unwrap_or("")
        .to_lowercase()
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect()
}

fn is_scrollable(node: &DomNode) -> bool {
    let style = style_normalized(node);
    let style_scroll = ["overflow:", "overflow-y:", "overflow-x:"]
        .iter()
        .any(|prop| {
            style
                .find(prop)
                .map(|at| {
                    let rest = &style[at + prop.len()..];
                    rest.starts_with("scroll") || rest.starts_with("auto")
                })
                .unwrap_or(false)
        });
    style_scroll
        || class_tokens(node).any(|t| t.to_lowercase().contains("scroll"))
        || node.attr("data-scrollable") == Some("true")
}

fn is_toggle(node: &DomNode) -> bool {
    let tag = node.tag.to_lowercase();
    (tag == "input"
        && matches!(
            node.attr("type").map(str::to_lowercase).as_deref(),
            Some("checkbox") | Some("switch")
        ))
        || node.attr("role") == Some("switch")
        || tag == "toggle"
}

fn toggle_default_on(node: &DomNode) -> bool {
    // HTML presence semantics: any value except an explicit "false" is on.
    match node.attr("checked") {
        Some(v) => !v.eq_ignore_ascii_case("false"),
        None => false,
    }
}

fn is_accordion_section(node: &DomNode) -> bool {
    node.tag.eq_ignore_ascii_case("details")
        || class_tokens(node).any(|t| t.to_lowercase().starts_with("accordion"))
}

fn is_step_indicator(node: &DomNode) -> bool {
    node.attr("role") == Some("progressbar")
        || node.attr("data-step-count").is_some()
        || class_tokens(node).any(|t| t.eq_ignore_ascii_case("step-indicator"))
}

fn is_button(node: &DomNode) -> bool {
    let tag = node.tag.to_lowercase();
    tag == "button"
        || node.attr("role") == Some("button")
        || (tag == "a"
            && class_tokens(node).any(|t| {
                let t = t.to_lowercase();
                t == "btn" || t.contains("button")
            }))
}

fn button_label(node: &DomNode) -> String {
    let text = node.text.trim();
    if !text.is_empty() {
        return text.to_string();
    }
    node.attr("aria-label").unwrap_or("").trim().to_string()
}

fn is_primary_styled(node: &DomNode) -> bool {
    class_tokens(node).any(|t| t.to_lowercase().contains("primary"))
}

/// Extracts the documented feature set from a consent DOM and (optionally)
/// the recorded flow. `screenshot_features` is attached verbatim when the
/// externally computed vector is available.
pub fn extract_ui_features(
    dom: &DomNode,
    flow_steps: Option<&[FlowStep]>,
    lexicon: &ActionLexicon,
    screenshot_features: Option<Vec<f64>>,
) -> UiFeatureVector {
    let mut f = UiFeatureVector::default();

    for node in dom.walk() {
        if is_scrollable(node) {
            f.has_scrollable_container = true;
        }
        if is_toggle(node) {
            f.toggle_count += 1;
            if toggle_default_on(node) {
                f.toggles_default_on += 1;
            }
        }
        if is_accordion_section(node) {
            f.accordion_section_count += 1;
        }
        if is_step_indicator(node) {
            f.has_step_indicator = true;
            if f.step_count == 0 {
                if let Some(n) = node
                    .attr("data-step-count")
                    .and_then(|v| v.parse::<u32>().ok())
                {
                    f.step_count = n;
                }
            }
        }
        if is_button(node) {
            let label = button_label(node);
            match lexicon.classify(&label) {
                Some(ActionClass::Reject) => {
                    f.reject_button_present = true;
                    if node.visible_without_scroll {
                        f.reject_visible_without_scroll = true;
                    }
                    if is_primary_styled(node) {
                        f.reject_primary_styled = true;
                    }
                }
                Some(ActionClass::Accept) => {
                    f.accept_button_present = true;
                    if is_primary_styled(node) {
                        f.accept_primary_styled = true;
                    }
                }
                _ => {}
            }
        }
    }

    if let Some(steps) = flow_steps {
        // The recorded flow is the authority on step count when present.
        f.step_count = steps.len() as u32;
        for step in steps {
            for action in &step.actions {
                match lexicon.classify(&action.label) {
                    Some(ActionClass::Reject) => {
                        if f.steps_to_reject.is_none() {
                            f.steps_to_reject = Some(step.index + 1);
                        }
                    }
                    Some(ActionClass::Reopen) => {
                        f.reopen_affordance = true;
                    }
                    _ => {}
                }
            }
        }
    }
    f.screenshot_features = screenshot_features;
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{ActionDescriptor, ActionKind};

    fn node(tag: &str) -> DomNode {
        DomNode::new(tag)
    }

    fn button(label: &str, visible: bool, class: &str) -> DomNode {
        let mut b = node("button");
        b.text = label.into();
        b.visible_without_scroll = visible;
        if !class.is_empty() {
            b.attrs.insert("class".into(), class.into());
        }
        b
    }

    fn lex() -> ActionLexicon {
        ActionLexicon::default_lexicon()
    }

    #[test]
    fn visible_reject_button_sets_both_flags() {
        let mut root = node("div");
        root.children.push(button("Reject all", true, ""));
        let f = extract_ui_features(&root, None, &lex(), None);
        assert!(f.reject_button_present);
        assert!(f.reject_visible_without_scroll);
        assert!(!f.accept_button_present);
    }

    #[test]
    fn toggle_counts_match_hand_count() {
        let mut root = node("div");
        for i in 0..5 {
            let mut t = node("input");
            t.attrs.insert("type".into(), "checkbox".into());
            if i < 3 {
                t.attrs.insert("checked".into(), "true".into());
            }
            root.children.push(t);
        }
        let f = extract_ui_features(&root, None, &lex(), None);
        assert_eq!(f.toggle_count, 5);
        assert_eq!(f.toggles_default_on, 3);
        assert!(f.toggles_default_on <= f.toggle_count);
    }

    #[test]
    fn steps_to_reject_is_one_based_first_occurrence() {
        let accept = ActionDescriptor {
            label: "Accept all".into(),
            kind: ActionKind::Button,
            visible_without_scroll: true,
            default_state: None,
        };
        let reject = ActionDescriptor {
            label: "Reject all".into(),
            kind: ActionKind::Button,
            visible_without_scroll: true,
            default_state: None,
        };
        let steps = vec![
            FlowStep { index: 0, actions: vec![accept.clone()] },
            FlowStep { index: 1, actions: vec![accept.clone()] },
            FlowStep { index: 2, actions: vec![reject] },
        ];
        let f = extract_ui_features(&node("div"), Some(&steps), &lex(), None);
        assert_eq!(f.steps_to_reject, Some(3));
        assert_eq!(f.step_count, 3);
    }

    #[test]
    fn continue_without_accepting_is_reject_not_accept() {
        let mut root = node("div");
        root.children
            .push(button("Continue without accepting", true, ""));
        let f = extract_ui_features(&root, None, &lex(), None);
        assert!(f.reject_button_present);
        assert!(!f.accept_button_present);
    }

    #[test]
    fn scroll_detection_from_style_class_and_data_attr() {
        for (attr, value) in [
            ("style", "height: 200px; overflow-y: auto"),
            ("class", "consent scroll-container"),
            ("data-scrollable", "true"),
        ] {
            let mut n = node("div");
            n.attrs.insert(attr.into(), value.into());
            let f = extract_ui_features(&n, None, &lex(), None);
            assert!(f.has_scrollable_container, "attr {attr}={value}");
        }
        let mut plain = node("div");
        plain
            .attrs
            .insert("style".into(), "color: red; overflow: hidden".into());
        let f = extract_ui_features(&plain, None, &lex(), None);
        assert!(!f.has_scrollable_container);
    }

    #[test]
    fn accordion_sections_counted_across_tree() {
        let mut root = node("div");
        for _ in 0..3 {
            let mut d = node("div");
            d.attrs.insert("class".into(), "accordion-section".into());
            root.children.push(d);
        }
        root.children.push(node("details"));
        let f = extract_ui_features(&root, None, &lex(), None);
        assert_eq!(f.accordion_section_count, 4);
    }

    #[test]
    fn reopen_affordance_comes_from_flow() {
        let steps = vec![FlowStep {
            index: 0,
            actions: vec![ActionDescriptor {
                label: "Cookie settings".into(),
                kind: ActionKind::Link,
                visible_without_scroll: true,
                default_state: None,
            }],
        }];
        let f = extract_ui_features(&node("div"), Some(&steps), &lex(), None);
        assert!(f.reopen_affordance);
        assert_eq!(f.steps_to_reject, None);
    }

    #[test]
    fn primary_styling_detected_per_class() {
        let mut root = node("div");
        root.children.push(button("Accept all", true, "btn btn-primary"));
        root.children.push(button("Reject all", false, "btn link-muted"));
        let f = extract_ui_features(&root, None, &lex(), None);
        assert!(f.accept_primary_styled);
        assert!(!f.reject_primary_styled);
        assert!(f.reject_button_present);
        assert!(!f.reject_visible_without_scroll);
    }
}
