//! Longitudinal privacy-audit pipeline.
//!
//! The crate ingests monthly site-snapshot bundles into a content-addressed
//! store, diffs privacy-policy clauses across months, classifies consent-UI
//! patterns from serialized DOM features, scores claim–UI alignment, and
//! runs panel analytics (prevalence, transitions, change points, two-way
//! fixed effects, event studies, inverse-probability weighting, bootstrap
//! error propagation) over the resulting site×month table. A deterministic
//! synthetic-corpus generator with planted effects powers desk-scale
//! verification of every estimator.

pub mod bundle;
pub mod claims;
pub mod error;
pub mod panel;
pub mod policy;
pub mod stats;
pub mod store;
pub mod synth;
pub mod types;
pub mod ui;

pub use error::{Error, Result};
