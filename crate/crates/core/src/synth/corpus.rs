//! Corpus rendering: turns [`SiteTruth`] into on-disk crawl bundles —
//! policy text, consent DOM, recorded flow, screenshot features, manifest —
//! plus the gold label file and a ground-truth echo. Rendering is a pure
//! function of the truth records, so the same spec always produces a
//! byte-identical tree.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bundle::{ActionDescriptor, ActionKind, DomNode, FlowStep};
use crate::claims::{ClaimField, ClaimSet};
use crate::error::{Error, Result};
use crate::store::{
    BundleManifest, ARTIFACT_CONSENT_DOM, ARTIFACT_FLOW_STEPS, ARTIFACT_POLICY,
    ARTIFACT_SCREENSHOT_FEATURES,
};
use crate::types::Pattern;
use crate::ui::{write_gold_jsonl, GoldRecord};

use super::sites::{generate_sites, MonthTruth, SiteTruth, SECTION_COUNT, SECTION_RIGHTS};
use super::spec::ScenarioSpec;

/// Number of screenshot feature dimensions the renderer emits.
pub const SCREENSHOT_DIM: usize = 4;

/// Everything a generated corpus contains, by path.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusPaths {
    pub root: PathBuf,
    pub scenario: PathBuf,
    pub ground_truth: PathBuf,
    pub bundles: PathBuf,
    pub gold: PathBuf,
}

/// The serialized ground truth: the scenario plus every planted site
/// history. Downstream checks read planted values from here instead of
/// restating them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub scenario: ScenarioSpec,
    pub sites: Vec<SiteTruth>,
}

impl GroundTruth {
    pub fn from_path(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&raw).map_err(|e| Error::parse("ground truth", e))
    }
}

// --- Policy text -----------------------------------------------------------
//
// Three interchangeable phrasings per section, two sentences each. The
// vocabulary is partitioned so that sentences classify into their own
// section and the four claim trigger phrases appear nowhere outside the
// dedicated claim sentences (trigger patterns may gap across the whole
// document, so stray words like "necessary" or "at any time" elsewhere
// would light up claims that were never planted).

const INTRO_VARIANTS: [&str; 3] = [
    "This notice explains how we handle information when you visit our \
     pages. It applies to every part of the site.",
    "Welcome, and thank you for reading this notice. The sections below \
     describe how visitor information is handled across the site.",
    "The following notice covers how this site handles visitor \
     information. We update the text whenever our practices change.",
];

const PURPOSE_VARIANTS: [&str; 3] = [
    "We use your data for the purposes described here, including analytics \
     and measurement. Information also helps to personalize what you see.",
    "The main purpose of collection is running the service and analytics. \
     We use your information to improve our pages and features.",
    "Our team relies on usage records for advertising and analytics \
     purposes. We process your data to keep the service fast and relevant.",
];

const RETENTION_VARIANTS: [&str; 3] = [
    "We keep usage records for twelve months and delete them afterwards. \
     Backup copies expire on a rolling schedule.",
    "Account data is stored for as long as the account stays active. We \
     retain aggregate logs for two years and delete raw entries sooner.",
    "Retention periods differ by record type, with most entries erased \
     after ninety days. Older material is scheduled for deletion in \
     quarterly sweeps.",
];

const SHARING_VARIANTS: [&str; 3] = [
    "We share some records with service providers who run our \
     infrastructure. No third party may use them for its own ends.",
    "Sharing is restricted to vetted advertising partners and hosting \
     vendors. We never sell your records to data brokers.",
    "We disclose usage information to third parties that help operate the \
     service. Each recipient is bound by contract first.",
];

const LEGAL_VARIANTS: [&str; 3] = [
    "Our legal basis for most processing is legitimate interest, reviewed \
     twice a year. Where the law demands more, we rely on article 6 \
     grounds.",
    "Consent provides the lawful basis for optional features, and \
     contractual necessity covers the rest. A legal obligation can also \
     require narrow processing.",
    "We publish the basis for processing beside every entry in our \
     register. Most entries cite legitimate interest and some rest on a \
     legal obligation.",
];

const RIGHTS_VARIANTS: [&str; 3] = [
    "You may access the records we hold and ask for rectification of \
     mistakes. You can object to processing and request erasure where the \
     law allows.",
    "Your rights include access, rectification, and data portability. You \
     may request copies of stored records through the account dashboard.",
    "The law grants you the right to copies of your records and erasure of \
     stale data. To exercise it, lodge a complaint or file a request from \
     your profile page.",
];

const CONTACT_VARIANTS: [&str; 3] = [
    "Contact our data protection officer with questions about this notice. \
     You can also email us at privacy@example.com for a written answer.",
    "Questions reach us fastest through the address privacy@example.com. \
     Our postal address is listed on the imprint page for letters.",
    "Write to us if anything in this notice is unclear. The data \
     protection officer answers within four weeks through \
     privacy@example.com.",
];

const SECTION_VARIANTS_TABLE: [&[&str; 3]; SECTION_COUNT] = [
    &INTRO_VARIANTS,
    &PURPOSE_VARIANTS,
    &RETENTION_VARIANTS,
    &SHARING_VARIANTS,
    &LEGAL_VARIANTS,
    &RIGHTS_VARIANTS,
    &CONTACT_VARIANTS,
];

const SECTION_HEADINGS: [&str; SECTION_COUNT] = [
    "", // intro lives directly under the document title
    "Purposes of processing",
    "Retention periods",
    "Sharing with third parties",
    "Legal basis",
    "Your rights",
    "Contact",
];

/// The one sentence per claim that carries its trigger phrase.
fn claim_sentence(field: ClaimField) -> &'static str {
    match field {
        ClaimField::OptIn => {
            "Optional cookies are set after we ask for your consent before \
             any tracking begins."
        }
        ClaimField::EasyReject => {
            "You can reject non-essential cookies at any time from the \
             first banner screen."
        }
        ClaimField::Withdrawal => {
            "You keep the right to withdraw your consent at any time in \
             the preference center."
        }
        ClaimField::Minimization => {
            "Collection stays limited to what is necessary for each \
             feature to work."
        }
    }
}

/// Renders one month's policy document.
pub fn render_policy(site_id: &str, claims: &ClaimSet, variants: &[u8; SECTION_COUNT]) -> String {
    let mut doc = format!("# Privacy Policy for {site_id}\n");
    for section in 0..SECTION_COUNT {
        if !SECTION_HEADINGS[section].is_empty() {
            doc.push_str("\n## ");
            doc.push_str(SECTION_HEADINGS[section]);
            doc.push('\n');
        }
        doc.push('\n');
        doc.push_str(SECTION_VARIANTS_TABLE[section][variants[section] as usize]);
        doc.push('\n');
        if section == SECTION_RIGHTS {
            let planted: Vec<&str> = ClaimField::ALL
                .iter()
                .filter(|&&f| claims.get(f))
                .map(|&f| claim_sentence(f))
                .collect();
            if !planted.is_empty() {
                doc.push('\n');
                doc.push_str(&planted.join(" "));
                doc.push('\n');
            }
        }
    }
    doc
}

// --- Consent DOM and flow --------------------------------------------------

fn text_node(tag: &str, text: &str) -> DomNode {
    let mut n = DomNode::new(tag);
    n.text = text.into();
    n.visible_without_scroll = true;
    n
}

fn button(label: &str, class: &str, visible: bool) -> DomNode {
    let mut b = DomNode::new("button");
    b.text = label.into();
    b.visible_without_scroll = visible;
    b.attrs.insert("class".into(), class.into());
    b
}

fn checkbox(name: &str, checked: bool) -> DomNode {
    let mut c = DomNode::new("input");
    c.attrs.insert("type".into(), "checkbox".into());
    c.attrs.insert("name".into(), name.into());
    if checked {
        c.attrs.insert("checked".into(), "true".into());
    }
    c.visible_without_scroll = true;
    c
}

fn action(label: &str, kind: ActionKind, visible: bool) -> ActionDescriptor {
    ActionDescriptor {
        label: label.into(),
        kind,
        visible_without_scroll: visible,
        default_state: None,
    }
}

fn toggle_action(label: &str, on: bool) -> ActionDescriptor {
    ActionDescriptor {
        label: label.into(),
        kind: ActionKind::Toggle,
        visible_without_scroll: true,
        default_state: Some(on),
    }
}

/// Two optional-purpose toggles, all off; carried by non-pre-ticked banners
/// at sites whose truth says optional purposes start disabled.
fn off_toggle_block() -> DomNode {
    let mut block = DomNode::new("div");
    block.attrs.insert("class".into(), "consent-purposes".into());
    block.visible_without_scroll = true;
    block.children.push(checkbox("analytics", false));
    block.children.push(checkbox("advertising", false));
    block
}

fn actions_row(children: Vec<DomNode>) -> DomNode {
    let mut row = DomNode::new("div");
    row.attrs.insert("class".into(), "consent-actions".into());
    row.visible_without_scroll = true;
    row.children = children;
    row
}

fn banner_root() -> DomNode {
    let mut root = DomNode::new("div");
    root.attrs.insert("class".into(), "consent-banner".into());
    root.attrs.insert("id".into(), "cmp-root".into());
    root.visible_without_scroll = true;
    root
}

/// Renders the consent DOM for one pattern. Each tree makes exactly one
/// weak rule fire: structural markers for the target pattern, a visible
/// reject control wherever the reject-hidden rule must stay quiet, and
/// checked toggles only in the pre-ticked tree.
pub fn render_consent_dom(pattern: Pattern, default_off: bool) -> DomNode {
    let mut root = banner_root();
    match pattern {
        Pattern::ScrollWall => {
            root.children
                .push(text_node("h2", "We value your privacy"));
            let mut body = DomNode::new("div");
            body.attrs.insert("class".into(), "consent-body".into());
            body.attrs.insert(
                "style".into(),
                "max-height: 240px; overflow-y: auto".into(),
            );
            body.visible_without_scroll = true;
            body.children.push(text_node(
                "p",
                "Our partners and we place technical identifiers on this \
                 device to run the site.",
            ));
            let mut below = DomNode::new("p");
            below.text =
                "The full partner list and purpose descriptions follow below.".into();
            body.children.push(below);
            root.children.push(body);
            if default_off {
                root.children.push(off_toggle_block());
            }
            root.children.push(actions_row(vec![
                button("Accept all", "btn btn-primary", true),
                button("Reject all", "btn", true),
            ]));
        }
        Pattern::Accordion => {
            root.children
                .push(text_node("h2", "Your privacy choices"));
            for (title, blurb) in [
                ("Essential cookies", "Required for the site to function."),
                ("Marketing cookies", "Used to show relevant promotions."),
            ] {
                let mut section = DomNode::new("details");
                section.visible_without_scroll = true;
                section.children.push(text_node("summary", title));
                section.children.push(text_node("p", blurb));
                root.children.push(section);
            }
            if default_off {
                root.children.push(off_toggle_block());
            }
            root.children.push(actions_row(vec![
                button("Accept all", "btn btn-primary", true),
                button("Reject all", "btn", true),
            ]));
        }
        Pattern::MultiStep => {
            let mut indicator = DomNode::new("div");
            indicator
                .attrs
                .insert("class".into(), "step-indicator".into());
            indicator.attrs.insert("data-step-count".into(), "2".into());
            indicator.text = "Step 1 of 2".into();
            indicator.visible_without_scroll = true;
            root.children.push(indicator);
            root.children.push(text_node(
                "p",
                "Choose how this site may use cookies.",
            ));
            root.children.push(actions_row(vec![
                button("Accept all", "btn btn-primary", true),
                button("More options", "btn", true),
            ]));
            // The recorder expands the second pane into the same tree.
            let mut pane = DomNode::new("div");
            pane.attrs.insert("class".into(), "consent-pane".into());
            pane.visible_without_scroll = true;
            if default_off {
                pane.children.push(off_toggle_block());
            }
            pane.children.push(actions_row(vec![
                button("Reject all", "btn", true),
                button("Save choices", "btn", true),
            ]));
            root.children.push(pane);
        }
        Pattern::PreTicked => {
            root.children.push(text_node("h2", "Cookie preferences"));
            let mut purposes = DomNode::new("div");
            purposes
                .attrs
                .insert("class".into(), "consent-purposes".into());
            purposes.visible_without_scroll = true;
            purposes.children.push(checkbox("analytics", true));
            purposes.children.push(checkbox("advertising", true));
            purposes.children.push(checkbox("personalization", false));
            root.children.push(purposes);
            root.children.push(actions_row(vec![
                button("Accept all", "btn btn-primary", true),
                button("Reject all", "btn", true),
            ]));
        }
        Pattern::RejectHidden => {
            root.children
                .push(text_node("h2", "We care about your privacy"));
            root.children.push(text_node(
                "p",
                "Pick an option to keep browsing while we remember your \
                 choice.",
            ));
            if default_off {
                root.children.push(off_toggle_block());
            }
            root.children.push(actions_row(vec![
                button("Accept all", "btn btn-primary", true),
                button("More options", "btn", true),
            ]));
            let mut footer = DomNode::new("div");
            footer.attrs.insert("class".into(), "consent-footer".into());
            footer
                .children
                .push(button("Reject all", "btn link-muted", false));
            root.children.push(footer);
        }
    }
    root
}

/// Renders the recorded flow for one pattern. The reject action appears at
/// step 1 for single-screen banners, step 2 for the two-step dialog and
/// step 3 for the reject-hidden maze; the reopen affordance is a settings
/// link on the first step.
pub fn render_flow(pattern: Pattern, default_off: bool, reopen: bool) -> Vec<FlowStep> {
    let reopen_link = action("Cookie settings", ActionKind::Link, true);
    let mut steps = match pattern {
        Pattern::ScrollWall | Pattern::Accordion => {
            let mut first = vec![
                action("Accept all", ActionKind::Button, true),
                action("Reject all", ActionKind::Button, true),
            ];
            if default_off {
                first.push(toggle_action("Analytics", false));
                first.push(toggle_action("Advertising", false));
            }
            vec![FlowStep {
                index: 0,
                actions: first,
            }]
        }
        Pattern::MultiStep => {
            let mut second = vec![
                action("Reject all", ActionKind::Button, true),
                action("Save choices", ActionKind::Button, true),
            ];
            if default_off {
                second.insert(0, toggle_action("Analytics", false));
                second.insert(1, toggle_action("Advertising", false));
            }
            vec![
                FlowStep {
                    index: 0,
                    actions: vec![
                        action("Accept all", ActionKind::Button, true),
                        action("More options", ActionKind::Button, true),
                    ],
                },
                FlowStep {
                    index: 1,
                    actions: second,
                },
            ]
        }
        Pattern::PreTicked => vec![FlowStep {
            index: 0,
            actions: vec![
                action("Accept all", ActionKind::Button, true),
                action("Reject all", ActionKind::Button, true),
                toggle_action("Analytics", true),
                toggle_action("Advertising", true),
                toggle_action("Personalization", false),
            ],
        }],
        Pattern::RejectHidden => vec![
            FlowStep {
                index: 0,
                actions: vec![
                    action("Accept all", ActionKind::Button, true),
                    action("More options", ActionKind::Button, true),
                ],
            },
            FlowStep {
                index: 1,
                actions: vec![action("Partner overview", ActionKind::Button, true)],
            },
            FlowStep {
                index: 2,
                actions: vec![action("Reject all", ActionKind::Button, false)],
            },
        ],
    };
    if reopen {
        steps[0].actions.push(reopen_link);
    }
    steps
}

fn toggle_count(pattern: Pattern, default_off: bool) -> u32 {
    match pattern {
        Pattern::PreTicked => 3,
        _ if default_off => 2,
        _ => 0,
    }
}

fn step_count(pattern: Pattern) -> u32 {
    match pattern {
        Pattern::MultiStep => 2,
        Pattern::RejectHidden => 3,
        _ => 1,
    }
}

/// Externally computed screenshot embedding: a coarse but informative
/// fixed-length vector derived from the banner geometry.
pub fn render_screenshot_features(
    pattern: Pattern,
    default_off: bool,
    reopen: bool,
) -> Vec<f64> {
    vec![
        0.2 + 0.15 * pattern.index() as f64,
        f64::from(toggle_count(pattern, default_off)) / 4.0,
        f64::from(step_count(pattern)) / 3.0,
        if reopen { 1.0 } else { 0.0 },
    ]
}

// --- Bundle assembly --------------------------------------------------------

fn timestamp_for_month(month: u32) -> String {
    let year = 2024 + (month - 1) / 12;
    let mm = (month - 1) % 12 + 1;
    format!("{year}-{mm:02}-15T00:00:00Z")
}

fn vendor_for_rank(rank: u32) -> &'static str {
    match rank % 3 {
        0 => "cmp-alpha",
        1 => "cmp-beta",
        _ => "cmp-gamma",
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut body =
        serde_json::to_string_pretty(value).map_err(|e| Error::parse("serialize", e))?;
    body.push('\n');
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

/// Writes one site-month bundle directory and returns nothing; the caller
/// already knows the layout.
fn write_bundle(dir: &Path, site: &SiteTruth, m: &MonthTruth) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut artifacts = BTreeMap::new();

    if !m.policy_missing {
        let policy = render_policy(&site.site_id, &site.claims, &m.section_variants);
        let path = dir.join("policy.txt");
        fs::write(&path, policy).map_err(|e| Error::io(&path, e))?;
        artifacts.insert(ARTIFACT_POLICY.to_string(), "policy.txt".to_string());
    }

    if m.surfaced {
        let dom = render_consent_dom(m.pattern, site.default_off);
        write_json(&dir.join("consent_dom.json"), &dom)?;
        artifacts.insert(
            ARTIFACT_CONSENT_DOM.to_string(),
            "consent_dom.json".to_string(),
        );

        let flow = render_flow(m.pattern, site.default_off, site.reopen);
        write_json(&dir.join("flow_steps.json"), &flow)?;
        artifacts.insert(
            ARTIFACT_FLOW_STEPS.to_string(),
            "flow_steps.json".to_string(),
        );

        let shot = render_screenshot_features(m.pattern, site.default_off, site.reopen);
        write_json(&dir.join("screenshot_features.json"), &shot)?;
        artifacts.insert(
            ARTIFACT_SCREENSHOT_FEATURES.to_string(),
            "screenshot_features.json".to_string(),
        );
    }

    let manifest = BundleManifest {
        site_id: site.site_id.clone(),
        month: m.month,
        region: site.region,
        vertical: site.vertical,
        rank: site.rank,
        banner_surfaced: m.surfaced,
        surfacing_failed: m.surfacing_failed,
        load_ok: true,
        timestamp: Some(timestamp_for_month(m.month)),
        vendor: Some(vendor_for_rank(site.rank).to_string()),
        artifacts,
    };
    manifest.validate()?;
    write_json(&dir.join("manifest.json"), &manifest)
}

fn gold_records(sites: &[SiteTruth]) -> Vec<GoldRecord> {
    let mut records = Vec::new();
    for site in sites {
        for m in &site.months {
            if !m.gold {
                continue;
            }
            let mut codes = BTreeMap::new();
            codes.insert("coder-a".to_string(), m.pattern);
            if let Some(b) = m.coder_b_pattern {
                codes.insert("coder-b".to_string(), b);
            }
            records.push(GoldRecord {
                site_id: site.site_id.clone(),
                month: m.month,
                label: m.pattern,
                codes,
            });
        }
    }
    records
}

/// Generates the complete corpus for a scenario under `out_dir`:
/// `scenario.json`, `ground_truth.json`, `gold/gold.jsonl`, and one bundle
/// directory per site-month under `bundles/`.
pub fn generate_corpus(spec: &ScenarioSpec, out_dir: &Path) -> Result<CorpusPaths> {
    let sites = generate_sites(spec)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let paths = CorpusPaths {
        root: out_dir.to_path_buf(),
        scenario: out_dir.join("scenario.json"),
        ground_truth: out_dir.join("ground_truth.json"),
        bundles: out_dir.join("bundles"),
        gold: out_dir.join("gold").join("gold.jsonl"),
    };

    write_json(&paths.scenario, spec)?;
    for site in &sites {
        for m in &site.months {
            let dir = paths
                .bundles
                .join(&site.site_id)
                .join(format!("m{:02}", m.month));
            write_bundle(&dir, site, m)?;
        }
    }

    let gold_dir = paths.gold.parent().expect("gold path has a parent");
    fs::create_dir_all(gold_dir).map_err(|e| Error::io(gold_dir, e))?;
    write_gold_jsonl(&paths.gold, &gold_records(&sites))?;

    write_json(
        &paths.ground_truth,
        &GroundTruth {
            scenario: spec.clone(),
            sites,
        },
    )?;
    Ok(paths)
}
