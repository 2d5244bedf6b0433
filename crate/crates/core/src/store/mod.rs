//! Content-addressed snapshot store.
//!
//! A store is a directory holding an `index.jsonl` file plus (by convention,
//! not requirement) the ingested bundle directories. Each index line is one
//! [`SnapshotRecord`]: the snapshot key, elicitation flags, and the sha-256
//! digest of every artifact file. Re-ingesting byte-identical content is a
//! no-op; conflicting content for an existing `(site_id, month)` key is
//! rejected.

mod coverage;
mod manifest;

pub use coverage::{coverage_of, CoverageCell, CoverageReport};
pub use manifest::{
    read_manifest, BundleManifest, ARTIFACT_CONSENT_DOM, ARTIFACT_FLOW_STEPS,
    ARTIFACT_NETWORK_LOG, ARTIFACT_POLICY, ARTIFACT_SCREENSHOT_FEATURES,
};

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bundle::{validate_flow_steps, DomNode, FlowStep};
use crate::error::{Error, Result};
use crate::types::SnapshotKey;

pub const INDEX_FILE: &str = "index.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Lowercase-hex sha-256 of a byte slice.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

/// One hashed artifact file inside a bundle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    /// Path relative to the bundle directory.
    pub path: String,
    pub sha256: String,
}

/// One indexed snapshot: key, flags, and hashed artifact set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    #[serde(flatten)]
    pub key: SnapshotKey,
    pub banner_surfaced: bool,
    pub surfacing_failed: bool,
    pub load_ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vendor: Option<String>,
    /// Bundle directory relative to the store root (or the ingestion path
    /// verbatim when the bundle lives outside the store).
    pub bundle_dir: String,
    pub artifacts: BTreeMap<String, ArtifactEntry>,
    /// Length of the screenshot feature vector, when that artifact exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub screenshot_len: Option<usize>,
}

impl SnapshotRecord {
    pub fn has_artifact(&self, name: &str) -> bool {
        self.artifacts.contains_key(name)
    }

    /// Equality of everything except where the bundle happens to live on
    /// disk; this is the "byte-identical content" test for idempotent
    /// re-ingestion.
    fn content_eq(&self, other: &SnapshotRecord) -> bool {
        self.key == other.key
            && self.banner_surfaced == other.banner_surfaced
            && self.surfacing_failed == other.surfacing_failed
            && self.load_ok == other.load_ok
            && self.timestamp == other.timestamp
            && self.vendor == other.vendor
            && self.artifacts == other.artifacts
            && self.screenshot_len == other.screenshot_len
    }
}

/// The store: an on-disk index of snapshot records.
#[derive(Debug)]
pub struct SnapshotStore {
    root: PathBuf,
    records: BTreeMap<(String, u32), SnapshotRecord>,
}

impl SnapshotStore {
    /// Opens (or initializes) a store rooted at `root`. The directory is
    /// created if missing; an existing `index.jsonl` is loaded.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        let mut store = SnapshotStore {
            root,
            records: BTreeMap::new(),
        };
        let index = store.index_path();
        if index.exists() {
            let raw = fs::read_to_string(&index).map_err(|e| Error::io(&index, e))?;
            for (lineno, line) in raw.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let rec: SnapshotRecord = serde_json::from_str(line).map_err(|e| {
                    Error::parse(format!("{}:{}", index.display(), lineno + 1), e)
                })?;
                let id = (rec.key.site_id.clone(), rec.key.month);
                if store.records.insert(id, rec).is_some() {
                    return Err(Error::Conflict(format!(
                        "duplicate key in index at line {}",
                        lineno + 1
                    )));
                }
            }
        }
        Ok(store)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn index_path(&self) -> PathBuf {
        self.root.join(INDEX_FILE)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records in `(site_id, month)` order.
    pub fn records(&self) -> impl Iterator<Item = &SnapshotRecord> {
        self.records.values()
    }

    pub fn get(&self, site_id: &str, month: u32) -> Option<&SnapshotRecord> {
        self.records.get(&(site_id.to_string(), month))
    }

    /// Distinct site ids, sorted.
    pub fn site_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .records
            .keys()
            .map(|(site, _)| site.clone())
            .collect();
        ids.dedup();
        ids
    }

    /// Months available for one site, ascending.
    pub fn months_for(&self, site_id: &str) -> Vec<u32> {
        let site = site_id.to_string();
        self.records
            .range((site.clone(), 0)..=(site, u32::MAX))
            .map(|((_, month), _)| *month)
            .collect()
    }

    /// Ingests one bundle directory (a `manifest.json` plus artifact files).
    ///
    /// Artifact files are hashed and structurally validated. Re-ingesting a
    /// byte-identical bundle returns the same key without mutating the
    /// index; a key collision with different content is a conflict.
    pub fn ingest(&mut self, bundle_dir: &Path) -> Result<SnapshotKey> {
        let manifest = read_manifest(&bundle_dir.join(MANIFEST_FILE))?;
        let key = manifest.key();

        let mut artifacts = BTreeMap::new();
        let mut screenshot_len = None;
        for (name, rel) in &manifest.artifacts {
            let path = bundle_dir.join(rel);
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            self.validate_artifact(name, &path, &bytes, &mut screenshot_len)?;
            artifacts.insert(
                name.clone(),
                ArtifactEntry {
                    path: rel.clone(),
                    sha256: sha256_hex(&bytes),
                },
            );
        }

        let record = SnapshotRecord {
            key: key.clone(),
            banner_surfaced: manifest.banner_surfaced,
            surfacing_failed: manifest.surfacing_failed,
            load_ok: manifest.load_ok,
            timestamp: manifest.timestamp.clone(),
            vendor: manifest.vendor.clone(),
            bundle_dir: self.relative_bundle_dir(bundle_dir),
            artifacts,
            screenshot_len,
        };

        self.check_site_attrs(&record)?;

        let id = (key.site_id.clone(), key.month);
        if let Some(existing) = self.records.get(&id) {
            if existing.content_eq(&record) {
                return Ok(key); // idempotent re-ingest
            }
            return Err(Error::Conflict(format!(
                "snapshot {key} already indexed with different content"
            )));
        }
        self.records.insert(id, record);
        Ok(key)
    }

    /// Walks `root` recursively and ingests every directory containing a
    /// manifest file. Returns ingested keys (sorted) and per-bundle errors.
    pub fn ingest_tree(&mut self, root: &Path) -> (Vec<SnapshotKey>, Vec<(PathBuf, Error)>) {
        let mut dirs = Vec::new();
        collect_bundle_dirs(root, &mut dirs);
        dirs.sort();
        let mut keys = Vec::new();
        let mut errors = Vec::new();
        for dir in dirs {
            match self.ingest(&dir) {
                Ok(key) => keys.push(key),
                Err(e) => errors.push((dir, e)),
            }
        }
        (keys, errors)
    }

    /// Persists the index as sorted JSON-lines (atomic rename).
    pub fn save(&self) -> Result<()> {
        let mut out = String::new();
        for rec in self.records.values() {
            out.push_str(&serde_json::to_string(rec).map_err(|e| {
                Error::parse("index serialization", e)
            })?);
            out.push('\n');
        }
        let path = self.index_path();
        let tmp = self.root.join(format!("{INDEX_FILE}.tmp"));
        fs::write(&tmp, out).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        Ok(())
    }

    /// Coverage accounting over the whole store.
    pub fn coverage(&self) -> Result<CoverageReport> {
        if self.records.is_empty() {
            return Err(Error::Validation(
                "coverage requires a non-empty store".into(),
            ));
        }
        Ok(coverage_of(self.records.values()))
    }

    pub fn load_policy_text(&self, rec: &SnapshotRecord) -> Result<Option<String>> {
        let Some(bytes) = self.read_artifact(rec, ARTIFACT_POLICY)? else {
            return Ok(None);
        };
        let text = String::from_utf8(bytes).map_err(|e| {
            Error::parse(format!("{} policy text", rec.key), e)
        })?;
        Ok(Some(text))
    }

    pub fn load_consent_dom(&self, rec: &SnapshotRecord) -> Result<Option<DomNode>> {
        let Some(bytes) = self.read_artifact(rec, ARTIFACT_CONSENT_DOM)? else {
            return Ok(None);
        };
        let dom: DomNode = serde_json::from_slice(&bytes)
            .map_err(|e| Error::parse(format!("{} consent dom", rec.key), e))?;
        Ok(Some(dom))
    }

    pub fn load_flow_steps(&self, rec: &SnapshotRecord) -> Result<Option<Vec<FlowStep>>> {
        let Some(bytes) = self.read_artifact(rec, ARTIFACT_FLOW_STEPS)? else {
            return Ok(None);
        };
        let steps: Vec<FlowStep> = serde_json::from_slice(&bytes)
            .map_err(|e| Error::parse(format!("{} flow steps", rec.key), e))?;
        validate_flow_steps(&steps)?;
        Ok(Some(steps))
    }

    pub fn load_screenshot_features(&self, rec: &SnapshotRecord) -> Result<Option<Vec<f64>>> {
        let Some(bytes) = self.read_artifact(rec, ARTIFACT_SCREENSHOT_FEATURES)? else {
            return Ok(None);
        };
        let features: Vec<f64> = serde_json::from_slice(&bytes)
            .map_err(|e| Error::parse(format!("{} screenshot features", rec.key), e))?;
        Ok(Some(features))
    }

    /// Reads one artifact's bytes and verifies its recorded digest.
    fn read_artifact(&self, rec: &SnapshotRecord, name: &str) -> Result<Option<Vec<u8>>> {
        let Some(entry) = rec.artifacts.get(name) else {
            return Ok(None);
        };
        let path = self.resolve_bundle_dir(&rec.bundle_dir).join(&entry.path);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let digest = sha256_hex(&bytes);
        if digest != entry.sha256 {
            return Err(Error::Conflict(format!(
                "artifact {name} of {} changed on disk (hash mismatch)",
                rec.key
            )));
        }
        Ok(Some(bytes))
    }

    fn resolve_bundle_dir(&self, bundle_dir: &str) -> PathBuf {
        let p = Path::new(bundle_dir);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    /// Stores bundle paths relative to the root whenever the bundle lives
    /// under it, keeping the index free of machine-specific prefixes.
    fn relative_bundle_dir(&self, bundle_dir: &Path) -> String {
        let root = self
            .root
            .canonicalize()
            .unwrap_or_else(|_| self.root.clone());
        let bundle = bundle_dir
            .canonicalize()
            .unwrap_or_else(|_| bundle_dir.to_path_buf());
        match bundle.strip_prefix(&root) {
            Ok(rel) => rel.to_string_lossy().into_owned(),
            Err(_) => bundle.to_string_lossy().into_owned(),
        }
    }

    /// Deep validation of artifact payloads at ingest time.
    fn validate_artifact(
        &self,
        name: &str,
        path: &Path,
        bytes: &[u8],
        screenshot_len: &mut Option<usize>,
    ) -> Result<()> {
        match name {
            ARTIFACT_POLICY => {
                std::str::from_utf8(bytes)
                    .map_err(|e| Error::parse(path.display().to_string(), e))?;
            }
            ARTIFACT_CONSENT_DOM => {
                let _: DomNode = serde_json::from_slice(bytes)
                    .map_err(|e| Error::parse(path.display().to_string(), e))?;
            }
            ARTIFACT_FLOW_STEPS => {
                let steps: Vec<FlowStep> = serde_json::from_slice(bytes)
                    .map_err(|e| Error::parse(path.display().to_string(), e))?;
                validate_flow_steps(&steps)?;
            }
            ARTIFACT_SCREENSHOT_FEATURES => {
                let features: Vec<f64> = serde_json::from_slice(bytes)
                    .map_err(|e| Error::parse(path.display().to_string(), e))?;
                if features.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Validation(format!(
                        "{}: non-finite screenshot feature",
                        path.display()
                    )));
                }
                // The vector length must be constant across the store.
                let expected = self
                    .records
                    .values()
                    .find_map(|r| r.screenshot_len);
                if let Some(expected) = expected {
                    if features.len() != expected {
                        return Err(Error::Validation(format!(
                            "{}: screenshot feature length {} differs from store-wide {}",
                            path.display(),
                            features.len(),
                            expected
                        )));
                    }
                }
                *screenshot_len = Some(features.len());
            }
            _ => {} // opaque artifact (e.g. network log): hash only
        }
        Ok(())
    }

    /// Site attributes (region, vertical, rank) must be constant per site.
    fn check_site_attrs(&self, record: &SnapshotRecord) -> Result<()> {
        let site = record.key.site_id.clone();
        // Any one existing month suffices: attrs are identical by induction.
        let existing = self
            .records
            .range((site.clone(), 0)..=(site.clone(), u32::MAX))
            .next();
        if let Some((_, other)) = existing {
            if other.key.region != record.key.region
                || other.key.vertical != record.key.vertical
                || other.key.rank != record.key.rank
            {
                return Err(Error::Conflict(format!(
                    "site {site} attributes differ across snapshots"
                )));
            }
        }
        Ok(())
    }
}

fn collect_bundle_dirs(dir: &Path, out: &mut Vec<PathBuf>) {
    if dir.join(MANIFEST_FILE).is_file() {
        out.push(dir.to_path_buf());
        return;
    }
    let Ok(entries) = fs::read_dir(dir) else {
        return;
    };
    let mut children: Vec<PathBuf> = entries
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    children.sort();
    for child in children {
        collect_bundle_dirs(&child, out);
    }
}
