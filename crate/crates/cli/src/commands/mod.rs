//! Subcommand implementations and the resolved global context they share.

pub mod classify_ui;
pub mod diff_policy;
pub mod ingest;
pub mod panel;
pub mod score;
pub mod synth;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use consent_audit::store::SnapshotStore;

use crate::config::RunConfig;

/// Root seed for analysis commands when `--seed` is not given. `synth`
/// instead inherits the scenario's own seed.
pub const DEFAULT_SEED: u64 = 17;

/// Resolved global flags, shared by every subcommand.
pub struct Ctx {
    pub store_root: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub config: RunConfig,
}

impl Ctx {
    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn store_root(&self) -> Result<&Path> {
        match &self.store_root {
            Some(p) => Ok(p),
            None => bail!("this command needs --store (or the CONSENT_AUDIT_STORE env var)"),
        }
    }

    pub fn open_store(&self) -> Result<SnapshotStore> {
        Ok(SnapshotStore::open(self.store_root()?)?)
    }

    /// Opens the store and insists it has content — every analysis command
    /// is meaningless on an empty index.
    pub fn open_nonempty_store(&self) -> Result<SnapshotStore> {
        let store = self.open_store()?;
        if store.is_empty() {
            bail!(
                "store at {} is empty; run `ingest` first",
                self.store_root()?.display()
            );
        }
        Ok(store)
    }

    pub fn out_dir(&self) -> Result<&Path> {
        let Some(out) = &self.out else {
            bail!("this command needs --out");
        };
        std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        Ok(out)
    }
}
