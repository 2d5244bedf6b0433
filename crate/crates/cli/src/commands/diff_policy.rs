//! `diff-policy`: align consecutive policy versions and emit churn series.

use std::collections::BTreeMap;

use anyhow::{bail, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use consent_audit::policy::align_site_months;
use consent_audit::stats::{mean, median};
use consent_audit::store::ARTIFACT_POLICY;
use consent_audit::types::Taxonomy;

use crate::commands::Ctx;
use crate::report::{self, fmt_opt};

#[derive(Debug, Args)]
pub struct DiffPolicyArgs {
    /// Also dump the full clause-level alignment for every month pair
    /// (audit trail; large).
    #[arg(long)]
    dump_alignments: bool,
}

/// One churn observation: the later month of a consecutive policy pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChurnRow {
    pub site_id: String,
    pub month: u32,
    pub churn: f64,
    #[serde(default)]
    pub by_taxonomy: BTreeMap<Taxonomy, f64>,
}

pub fn run(ctx: &Ctx, args: &DiffPolicyArgs) -> Result<()> {
    let store = ctx.open_nonempty_store()?;
    let out = ctx.out_dir()?;
    let seed = ctx.seed();

    let mut churn_rows: Vec<ChurnRow> = Vec::new();
    let mut pair_dumps = Vec::new();
    let mut skipped: Vec<(String, usize)> = Vec::new();
    let mut failures: Vec<(String, String)> = Vec::new();

    for site_id in store.site_ids() {
        let policy_months = store
            .months_for(&site_id)
            .into_iter()
            .filter(|&m| {
                store
                    .get(&site_id, m)
                    .is_some_and(|rec| rec.has_artifact(ARTIFACT_POLICY))
            })
            .count();
        if policy_months < 2 {
            skipped.push((site_id, policy_months));
            continue;
        }
        match align_site_months(&store, &site_id, &ctx.config.taxonomy, &ctx.config.similarity) {
            Ok(pairs) => {
                for pair in pairs {
                    churn_rows.push(ChurnRow {
                        site_id: pair.site_id.clone(),
                        month: pair.next_month,
                        churn: pair.alignment.churn,
                        by_taxonomy: pair.by_taxonomy.clone(),
                    });
                    if args.dump_alignments {
                        pair_dumps.push(pair);
                    }
                }
            }
            Err(e) => failures.push((site_id, format!("{e:#}"))),
        }
    }

    report::write_jsonl(&out.join("churn_series.jsonl"), &churn_rows)?;
    if args.dump_alignments {
        report::write_jsonl(&out.join("alignments_policy.jsonl"), &pair_dumps)?;
    }

    let mut by_month: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    let mut by_site: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for row in &churn_rows {
        by_month.entry(row.month).or_default().push(row.churn);
        by_site.entry(&row.site_id).or_default().push(row.churn);
    }
    let monthly: Vec<Vec<String>> = by_month
        .iter()
        .map(|(month, values)| {
            vec![
                month.to_string(),
                values.len().to_string(),
                fmt_opt(mean(values)),
                fmt_opt(median(values)),
            ]
        })
        .collect();
    report::write_csv(
        &out.join("churn_monthly.csv"),
        seed,
        &["month", "pairs", "mean_churn", "median_churn"],
        &monthly,
    )?;
    let per_site: Vec<Vec<String>> = by_site
        .iter()
        .map(|(site, values)| {
            vec![
                site.to_string(),
                values.len().to_string(),
                fmt_opt(mean(values)),
            ]
        })
        .collect();
    report::write_csv(
        &out.join("churn_sites.csv"),
        seed,
        &["site_id", "pairs", "mean_churn"],
        &per_site,
    )?;
    let skipped_rows: Vec<Vec<String>> = skipped
        .iter()
        .map(|(site, n)| vec![site.clone(), n.to_string()])
        .collect();
    report::write_csv(
        &out.join("skipped_sites.csv"),
        seed,
        &["site_id", "policy_months"],
        &skipped_rows,
    )?;

    let overall: Vec<f64> = churn_rows.iter().map(|r| r.churn).collect();
    report::write_json(
        &out.join("summary.json"),
        seed,
        serde_json::json!({
            "command": "diff-policy",
            "sites": store.site_ids().len(),
            "aligned_sites": by_site.len(),
            "skipped_sites": skipped.len(),
            "pairs": churn_rows.len(),
            "mean_churn": mean(&overall),
            "failures": failures.len(),
        }),
    )?;

    if !failures.is_empty() {
        for (site, error) in &failures {
            eprintln!("diff-policy: {site}: {error}");
        }
        let sites: Vec<&str> = failures.iter().map(|(s, _)| s.as_str()).collect();
        bail!(
            "policy alignment failed for {} site(s): {}",
            failures.len(),
            sites.join(", ")
        );
    }
    println!(
        "diff-policy: {} churn pair(s) across {} site(s) ({} skipped), mean churn {}",
        churn_rows.len(),
        by_site.len(),
        skipped.len(),
        fmt_opt(mean(&overall)),
    );
    Ok(())
}
