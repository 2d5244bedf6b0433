//! Run-level configuration: bundled defaults plus optional JSON overrides.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

use consent_audit::claims::{ClaimLexicon, ImplicationMap, ScoringConfig};
use consent_audit::policy::{SimilarityConfig, TaxonomyLexicon};
use consent_audit::ui::ActionLexicon;

/// Shape of the `--config` file. Every field is optional; relative paths
/// resolve against the config file's own directory so a checked-in config
/// works from any working directory.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    taxonomy_lexicon: Option<PathBuf>,
    action_lexicon: Option<PathBuf>,
    claim_lexicon: Option<PathBuf>,
    implication_map: Option<PathBuf>,
    similarity: Option<SimilarityConfig>,
}

/// Fully resolved lexicons and parameters shared by the subcommands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub taxonomy: TaxonomyLexicon,
    pub actions: ActionLexicon,
    pub claims: ClaimLexicon,
    pub map: ImplicationMap,
    pub similarity: SimilarityConfig,
}

impl RunConfig {
    pub fn load(config_path: Option<&Path>) -> Result<Self> {
        let mut run = RunConfig {
            taxonomy: TaxonomyLexicon::default(),
            actions: ActionLexicon::default(),
            claims: ClaimLexicon::default(),
            map: ImplicationMap::canonical(),
            similarity: SimilarityConfig::default(),
        };
        let Some(path) = config_path else {
            return Ok(run);
        };
        let raw = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let file: ConfigFile = serde_json::from_str(&raw)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let resolve = |p: PathBuf| if p.is_relative() { base.join(p) } else { p };
        if let Some(p) = file.taxonomy_lexicon {
            run.taxonomy = TaxonomyLexicon::from_path(&resolve(p))?;
        }
        if let Some(p) = file.action_lexicon {
            run.actions = ActionLexicon::from_path(&resolve(p))?;
        }
        if let Some(p) = file.claim_lexicon {
            run.claims = ClaimLexicon::from_path(&resolve(p))?;
        }
        if let Some(p) = file.implication_map {
            run.map = ImplicationMap::from_path(&resolve(p))?;
        }
        if let Some(sim) = file.similarity {
            sim.validate()?;
            run.similarity = sim;
        }
        Ok(run)
    }

    pub fn scoring(&self) -> ScoringConfig {
        ScoringConfig {
            map: self.map.clone(),
            claim_lexicon: self.claims.clone(),
            action_lexicon: self.actions.clone(),
            taxonomy_lexicon: self.taxonomy.clone(),
        }
    }
}
