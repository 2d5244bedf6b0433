//! `ingest`: copy crawl bundles into the store and index them.
//!
//! Bundles are staged under `<store>/bundles/<site>/m<MM>/` before
//! ingestion so the index only ever records store-relative paths — a store
//! directory can be moved or compared across machines without a single
//! byte changing.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;

use consent_audit::store::{CoverageReport, SnapshotStore};
use consent_audit::types::SnapshotKey;

use crate::commands::Ctx;
use crate::report::{self, fmt_opt};

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Directories scanned recursively; any directory holding a
    /// manifest.json is treated as one bundle.
    #[arg(required = true, value_name = "DIR")]
    inputs: Vec<PathBuf>,
}

/// The manifest fields that pin a bundle's home inside the store.
#[derive(Deserialize)]
struct ManifestKey {
    site_id: String,
    month: u32,
}

/// Depth-first, lexicographic bundle discovery. Bundles never nest: a
/// manifest stops the descent.
fn find_bundle_dirs(root: &Path, found: &mut Vec<PathBuf>) -> Result<()> {
    if root.join("manifest.json").is_file() {
        found.push(root.to_path_buf());
        return Ok(());
    }
    let mut subdirs: Vec<PathBuf> = fs::read_dir(root)
        .with_context(|| format!("scanning {}", root.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    for dir in subdirs {
        find_bundle_dirs(&dir, found)?;
    }
    Ok(())
}

fn copy_dir(src: &Path, dst: &Path) -> Result<()> {
    fs::create_dir_all(dst).with_context(|| format!("creating {}", dst.display()))?;
    let mut entries: Vec<PathBuf> = fs::read_dir(src)
        .with_context(|| format!("reading {}", src.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    for entry in entries {
        let name = entry.file_name().expect("read_dir entries have names");
        let target = dst.join(name);
        if entry.is_dir() {
            copy_dir(&entry, &target)?;
        } else {
            fs::copy(&entry, &target)
                .with_context(|| format!("copying {} to {}", entry.display(), target.display()))?;
        }
    }
    Ok(())
}

/// Stages one bundle inside the store, then ingests it from there.
fn stage_and_ingest(
    store: &mut SnapshotStore,
    store_root: &Path,
    bundle: &Path,
) -> Result<SnapshotKey> {
    let manifest_path = bundle.join("manifest.json");
    let raw = fs::read_to_string(&manifest_path)
        .with_context(|| format!("reading {}", manifest_path.display()))?;
    let key: ManifestKey =
        serde_json::from_str(&raw).with_context(|| format!("parsing {}", manifest_path.display()))?;
    if key.site_id.contains(['/', '\\']) || key.site_id.contains("..") {
        bail!("manifest site_id {:?} is not a safe path component", key.site_id);
    }
    let dest = store_root
        .join("bundles")
        .join(&key.site_id)
        .join(format!("m{:02}", key.month));
    let already_staged = dest.exists()
        && fs::canonicalize(&dest).ok() == fs::canonicalize(bundle).ok();
    if !already_staged {
        copy_dir(bundle, &dest)?;
    }
    Ok(store.ingest(&dest)?)
}

fn coverage_rows(coverage: &CoverageReport) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    let mut push = |metric: String, stratum: String, cell: &consent_audit::store::CoverageCell| {
        rows.push(vec![
            metric,
            stratum,
            cell.numerator.to_string(),
            cell.denominator.to_string(),
            fmt_opt(cell.rate()),
        ]);
    };
    push("banner_surfaced".into(), "ALL".into(), &coverage.banner);
    for (region, cell) in &coverage.banner_by_region {
        push("banner_surfaced".into(), region.to_string(), cell);
    }
    push("load_ok".into(), "ALL".into(), &coverage.load_ok);
    for (name, cell) in &coverage.artifacts {
        push(format!("artifact:{name}"), "ALL".into(), cell);
    }
    for (name, by_region) in &coverage.artifacts_by_region {
        for (region, cell) in by_region {
            push(format!("artifact:{name}"), region.to_string(), cell);
        }
    }
    rows
}

pub fn run(ctx: &Ctx, args: &IngestArgs) -> Result<()> {
    let store_root = ctx.store_root()?;
    let out = ctx.out_dir()?;
    let mut store = ctx.open_store()?;

    let mut bundles = Vec::new();
    for input in &args.inputs {
        if !input.is_dir() {
            bail!("input {} is not a directory", input.display());
        }
        find_bundle_dirs(input, &mut bundles)?;
    }
    if bundles.is_empty() {
        bail!("no bundle directories (manifest.json) found under the given inputs");
    }

    let mut ingested = 0usize;
    let mut failures: Vec<(String, String)> = Vec::new();
    for bundle in &bundles {
        match stage_and_ingest(&mut store, store_root, bundle) {
            Ok(_) => ingested += 1,
            Err(e) => failures.push((bundle.display().to_string(), format!("{e:#}"))),
        }
    }
    store.save()?;

    // Whatever landed is real: coverage and the summary are written even
    // when some bundles failed, so partial runs stay inspectable.
    let coverage = store.coverage()?;
    report::write_csv(
        &out.join("coverage.csv"),
        ctx.seed(),
        &["metric", "stratum", "numerator", "denominator", "rate"],
        &coverage_rows(&coverage),
    )?;
    report::write_json(
        &out.join("summary.json"),
        ctx.seed(),
        serde_json::json!({
            "command": "ingest",
            "bundles_found": bundles.len(),
            "ingested": ingested,
            "failed": failures.len(),
            "snapshots": store.len(),
            "sites": store.site_ids().len(),
        }),
    )?;

    if !failures.is_empty() {
        let rows: Vec<Vec<String>> = failures
            .iter()
            .map(|(bundle, error)| vec![bundle.clone(), error.clone()])
            .collect();
        report::write_csv(
            &out.join("ingest_errors.csv"),
            ctx.seed(),
            &["bundle", "error"],
            &rows,
        )?;
        for (bundle, error) in &failures {
            eprintln!("ingest: {bundle}: {error}");
        }
        bail!(
            "{} of {} bundle(s) failed to ingest; details in ingest_errors.csv",
            failures.len(),
            bundles.len()
        );
    }
    println!(
        "ingest: {} snapshot(s) across {} site(s) indexed into {}",
        store.len(),
        store.site_ids().len(),
        store_root.display()
    );
    Ok(())
}
