//! `score`: claim–UI alignment for every snapshot, distribution summaries,
//! and the predicate-ablation table.

use std::collections::BTreeMap;

use anyhow::Result;
use clap::Args;

use consent_audit::claims::{ablate_all, score_store, ClaimField, PredicateField, DEFAULT_ABLATION_DRAWS};
use consent_audit::panel::box_stats;
use consent_audit::stats::{mean, median};
use consent_audit::types::Region;

use crate::commands::Ctx;
use crate::report::{self, fmt_f64, fmt_opt};

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Bootstrap draws behind each ablation interval.
    #[arg(long, default_value_t = DEFAULT_ABLATION_DRAWS, value_name = "N")]
    ablation_draws: usize,
}

pub fn run(ctx: &Ctx, args: &ScoreArgs) -> Result<()> {
    let store = ctx.open_nonempty_store()?;
    let out = ctx.out_dir()?;
    let seed = ctx.seed();

    let records = score_store(&store, &ctx.config.scoring())?;
    report::write_jsonl(&out.join("alignments.jsonl"), &records)?;

    // Score distributions exclude no-policy snapshots: their A is a
    // vacuous 1 and would flatter every stratum it lands in.
    let scored: Vec<&consent_audit::claims::AlignmentRecord> =
        records.iter().filter(|r| !r.no_policy).collect();

    let mut by_region: BTreeMap<Region, Vec<f64>> = BTreeMap::new();
    let mut by_month: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for rec in &scored {
        by_region.entry(rec.key.region).or_default().push(rec.a);
        by_month.entry(rec.key.month).or_default().push(rec.a);
    }
    let region_rows: Vec<Vec<String>> = by_region
        .iter()
        .filter_map(|(region, values)| {
            box_stats(values).map(|b| {
                vec![
                    region.to_string(),
                    b.n.to_string(),
                    fmt_f64(b.median),
                    fmt_f64(b.q1),
                    fmt_f64(b.q3),
                    fmt_f64(b.lo_whisker),
                    fmt_f64(b.hi_whisker),
                ]
            })
        })
        .collect();
    report::write_csv(
        &out.join("alignment_by_region.csv"),
        seed,
        &["region", "n", "median", "q1", "q3", "lo_whisker", "hi_whisker"],
        &region_rows,
    )?;
    let month_rows: Vec<Vec<String>> = by_month
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
        &out.join("alignment_by_month.csv"),
        seed,
        &["month", "n", "mean_a", "median_a"],
        &month_rows,
    )?;

    let claim_rows: Vec<Vec<String>> = ClaimField::ALL
        .iter()
        .map(|&field| {
            let count = scored.iter().filter(|r| r.claims.get(field)).count();
            let share = count as f64 / scored.len().max(1) as f64;
            vec![field.to_string(), count.to_string(), fmt_f64(share)]
        })
        .collect();
    report::write_csv(
        &out.join("claims.csv"),
        seed,
        &["claim", "count", "share"],
        &claim_rows,
    )?;

    let surfaced: Vec<&&consent_audit::claims::AlignmentRecord> =
        scored.iter().filter(|r| r.banner_surfaced).collect();
    let predicate_rows: Vec<Vec<String>> = PredicateField::ALL
        .iter()
        .map(|&field| {
            let count = surfaced.iter().filter(|r| r.predicates.get(field)).count();
            let share = count as f64 / surfaced.len().max(1) as f64;
            vec![field.to_string(), count.to_string(), fmt_f64(share)]
        })
        .collect();
    report::write_csv(
        &out.join("predicates.csv"),
        seed,
        &["predicate", "count", "share"],
        &predicate_rows,
    )?;

    let ablations = ablate_all(&records, &ctx.config.map, seed, args.ablation_draws)?;
    let ablation_rows: Vec<Vec<String>> = ablations
        .iter()
        .map(|a| {
            vec![
                a.removed.to_string(),
                a.weight.to_string(),
                fmt_f64(a.delta_median_pp),
                fmt_f64(a.ci_lo),
                fmt_f64(a.ci_hi),
                fmt_f64(a.cliffs_delta),
            ]
        })
        .collect();
    report::write_csv(
        &out.join("ablation.csv"),
        seed,
        &[
            "predicate",
            "weight",
            "delta_median_pp",
            "ci_lo",
            "ci_hi",
            "cliffs_delta",
        ],
        &ablation_rows,
    )?;

    let scores: Vec<f64> = scored.iter().map(|r| r.a).collect();
    report::write_json(
        &out.join("summary.json"),
        seed,
        serde_json::json!({
            "command": "score",
            "snapshots": records.len(),
            "policy_bearing": scored.len(),
            "surfaced_scored": surfaced.len(),
            "mean_a": mean(&scores),
            "median_a": median(&scores),
        }),
    )?;
    println!(
        "score: {} snapshot(s) scored ({} policy-bearing), median A {}",
        records.len(),
        scored.len(),
        fmt_opt(median(&scores)),
    );
    Ok(())
}
