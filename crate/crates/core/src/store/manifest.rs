//! On-disk bundle manifest: the JSON file each snapshot directory carries.

use std::collections::BTreeMap;
use std::path::{Component, Path};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Region, SnapshotKey, Vertical};

/// Well-known artifact names. Ingestion hashes any artifact the manifest
/// lists; these constants name the ones the pipeline itself consumes.
pub const ARTIFACT_POLICY: &str = "policy";
pub const ARTIFACT_CONSENT_DOM: &str = "consent_dom";
pub const ARTIFACT_FLOW_STEPS: &str = "flow_steps";
pub const ARTIFACT_SCREENSHOT_FEATURES: &str = "screenshot_features";
pub const ARTIFACT_NETWORK_LOG: &str = "network_log";

/// `manifest.json` as written by the capture tooling. Unknown extra fields
/// are tolerated; the listed ones are mandatory unless defaulted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub site_id: String,
    pub month: u32,
    pub region: Region,
    pub vertical: Vertical,
    pub rank: u32,
    pub banner_surfaced: bool,
    pub surfacing_failed: bool,
    pub load_ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vendor: Option<String>,
    /// Artifact name → path relative to the bundle directory.
    #[serde(default)]
    pub artifacts: BTreeMap<String, String>,
}

impl BundleManifest {
    pub fn key(&self) -> SnapshotKey {
        SnapshotKey {
            site_id: self.site_id.clone(),
            month: self.month,
            region: self.region,
            vertical: self.vertical,
            rank: self.rank,
        }
    }

    /// Structural checks that do not require touching artifact files.
    pub fn validate(&self) -> Result<()> {
        self.key().validate()?;
        if self.surfacing_failed && self.banner_surfaced {
            return Err(Error::Validation(format!(
                "{}: surfacing_failed contradicts banner_surfaced",
                self.site_id
            )));
        }
        if self.banner_surfaced && !self.artifacts.contains_key(ARTIFACT_CONSENT_DOM) {
            return Err(Error::Validation(format!(
                "{}: banner_surfaced requires a {} artifact",
                self.site_id, ARTIFACT_CONSENT_DOM
            )));
        }
        for (name, rel) in &self.artifacts {
            if name.trim().is_empty() {
                return Err(Error::Validation(format!(
                    "{}: empty artifact name",
                    self.site_id
                )));
            }
            validate_relative_path(rel).map_err(|e| {
                Error::Validation(format!("{}: artifact {name}: {e}", self.site_id))
            })?;
        }
        Ok(())
    }
}

/// Rejects absolute paths and parent-directory escapes in artifact paths.
fn validate_relative_path(rel: &str) -> Result<()> {
    let path = Path::new(rel);
    if rel.trim().is_empty() {
        return Err(Error::Validation("empty path".into()));
    }
    for component in path.components() {
        match component {
            Component::Normal(_) | Component::CurDir => {}
            Component::ParentDir => {
                return Err(Error::Validation(format!(
                    "path {rel:?} escapes the bundle directory"
                )))
            }
            Component::RootDir | Component::Prefix(_) => {
                return Err(Error::Validation(format!("path {rel:?} is not relative")))
            }
        }
    }
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<BundleManifest> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: BundleManifest = serde_json::from_str(&raw)
        .map_err(|e| Error::parse(path.display().to_string(), e))?;
    manifest.validate()?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> BundleManifest {
        BundleManifest {
            site_id: "example.org".into(),
            month: 0,
            region: Region::Eu,
            vertical: Vertical::News,
            rank: 1,
            banner_surfaced: false,
            surfacing_failed: false,
            load_ok: true,
            timestamp: None,
            vendor: None,
            artifacts: BTreeMap::new(),
        }
    }

    #[test]
    fn surfaced_banner_requires_dom_artifact() {
        let mut m = minimal();
        m.banner_surfaced = true;
        assert!(m.validate().is_err());
        m.artifacts
            .insert(ARTIFACT_CONSENT_DOM.into(), "consent_dom.json".into());
        assert!(m.validate().is_ok());
    }

    #[test]
    fn surfacing_failed_excludes_surfaced() {
        let mut m = minimal();
        m.surfacing_failed = true;
        m.banner_surfaced = true;
        m.artifacts
            .insert(ARTIFACT_CONSENT_DOM.into(), "consent_dom.json".into());
        assert!(m.validate().is_err());
    }

    #[test]
    fn artifact_paths_must_stay_inside_bundle() {
        let mut m = minimal();
        m.artifacts.insert("policy".into(), "../other.txt".into());
        assert!(m.validate().is_err());
        m.artifacts.insert("policy".into(), "/etc/passwd".into());
        assert!(m.validate().is_err());
        m.artifacts.insert("policy".into(), "sub/policy.txt".into());
        assert!(m.validate().is_ok());
    }

    #[test]
    fn manifest_json_roundtrip_tolerates_unknown_fields() {
        let json = r#"{
            "site_id": "a.example", "month": 2, "region": "US_CA",
            "vertical": "RETAIL", "rank": 9, "banner_surfaced": false,
            "surfacing_failed": true, "load_ok": true,
            "artifacts": {"policy": "policy.txt"},
            "crawler_build": "ignored-extra-field"
        }"#;
        let m: BundleManifest = serde_json::from_str(json).unwrap();
        assert_eq!(m.rank, 9);
        assert!(m.validate().is_ok());
    }
}
