//! Synthetic scenario generation: parameterized site cohorts with known
//! ground truth, rendered either as on-disk crawl bundles (the corpus path,
//! exercising ingestion and every extractor) or directly as analysis panels
//! (the panel path, where planted effects must be recovered exactly).

mod corpus;
mod panel;
mod series;
mod sites;
mod spec;

pub use corpus::{
    generate_corpus, render_consent_dom, render_flow, render_policy,
    render_screenshot_features, CorpusPaths, GroundTruth, SCREENSHOT_DIM,
};
pub use panel::{generate_panel, SyntheticPanel};
pub use series::generate_step_series;
pub use sites::{
    generate_sites, MonthTruth, SiteTruth, SECTION_CONTACT, SECTION_COUNT, SECTION_INTRO,
    SECTION_LEGAL, SECTION_PURPOSE, SECTION_RETENTION, SECTION_RIGHTS, SECTION_SHARING,
    VARIANTS_PER_SECTION,
};
pub use spec::{EventSpec, ScenarioSpec, StepSeriesSpec};
