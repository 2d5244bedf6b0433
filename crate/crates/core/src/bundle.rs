//! Schemas for the artifact payloads carried inside a snapshot bundle:
//! the serialized consent-banner DOM and the recorded interaction flow.
//!
//! These are external interchange formats, so every field tolerates absence
//! where the capture tooling may omit it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One node of the serialized consent-banner DOM.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomNode {
    pub tag: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attrs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<DomNode>,
    /// Whether the node is inside the initial viewport (no scrolling needed).
    #[serde(default)]
    pub visible_without_scroll: bool,
}

impl DomNode {
    pub fn new(tag: impl Into<String>) -> Self {
        DomNode {
            tag: tag.into(),
            attrs: BTreeMap::new(),
            text: String::new(),
            children: Vec::new(),
            visible_without_scroll: false,
        }
    }

    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attrs.get(name).map(String::as_str)
    }

    /// Depth-first pre-order walk over the subtree, including `self`.
    pub fn walk(&self) -> impl Iterator<Item = &DomNode> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let node = stack.pop()?;
            // Push children in reverse so iteration stays document-ordered.
            for child in node.children.iter().rev() {
                stack.push(child);
            }
            Some(node)
        })
    }

    pub fn count_nodes(&self) -> usize {
        self.walk().count()
    }
}

/// Kind of interactive element a recorded flow action touched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ActionKind {
    Button,
    Toggle,
    Link,
}

/// One interactive control offered at a flow step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionDescriptor {
    pub label: String,
    pub kind: ActionKind,
    #[serde(default)]
    pub visible_without_scroll: bool,
    /// For toggles: whether the control started in the "on" state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_state: Option<bool>,
}

/// One screen of the recorded consent flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowStep {
    pub index: u32,
    pub actions: Vec<ActionDescriptor>,
}

/// Checks the structural invariants of a recorded flow: step indices are
/// contiguous from zero and every step offers at least one action.
pub fn validate_flow_steps(steps: &[FlowStep]) -> Result<()> {
    for (i, step) in steps.iter().enumerate() {
        if step.index as usize != i {
            return Err(Error::Validation(format!(
                "flow steps must be contiguous from 0; found index {} at position {}",
                step.index, i
            )));
        }
        if step.actions.is_empty() {
            return Err(Error::Validation(format!(
                "flow step {} has no actions",
                step.index
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(tag: &str) -> DomNode {
        DomNode::new(tag)
    }

    #[test]
    fn walk_is_preorder_document_order() {
        let mut root = DomNode::new("div");
        let mut a = leaf("a");
        a.children.push(leaf("b"));
        root.children.push(a);
        root.children.push(leaf("c"));
        let tags: Vec<&str> = root.walk().map(|n| n.tag.as_str()).collect();
        assert_eq!(tags, vec!["div", "a", "b", "c"]);
        assert_eq!(root.count_nodes(), 4);
    }

    #[test]
    fn dom_serde_roundtrip() {
        let mut node = DomNode::new("button");
        node.attrs.insert("class".into(), "primary".into());
        node.text = "Accept all".into();
        node.visible_without_scroll = true;
        let json = serde_json::to_string(&node).unwrap();
        let back: DomNode = serde_json::from_str(&json).unwrap();
        assert_eq!(back, node);
        // Omitted optional fields default cleanly.
        let sparse: DomNode = serde_json::from_str(r#"{"tag":"div"}"#).unwrap();
        assert_eq!(sparse.tag, "div");
        assert!(!sparse.visible_without_scroll);
        assert!(sparse.children.is_empty());
    }

    #[test]
    fn flow_validation_rejects_gaps_and_empty_steps() {
        let action = ActionDescriptor {
            label: "Accept all".into(),
            kind: ActionKind::Button,
            visible_without_scroll: true,
            default_state: None,
        };
        let good = vec![
            FlowStep {
                index: 0,
                actions: vec![action.clone()],
            },
            FlowStep {
                index: 1,
                actions: vec![action.clone()],
            },
        ];
        assert!(validate_flow_steps(&good).is_ok());

        let gap = vec![FlowStep {
            index: 1,
            actions: vec![action.clone()],
        }];
        assert!(validate_flow_steps(&gap).is_err());

        let empty_step = vec![FlowStep {
            index: 0,
            actions: vec![],
        }];
        assert!(validate_flow_steps(&empty_step).is_err());
    }
}
