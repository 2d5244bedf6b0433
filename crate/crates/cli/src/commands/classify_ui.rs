//! `classify-ui`: weak-label the surfaced consent UIs, train the pattern
//! classifier on the resolved votes, label every surfaced snapshot, and —
//! when a gold file is given — evaluate against it.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use consent_audit::claims::snapshot_features;
use consent_audit::types::{Pattern, PatternLabel};
use consent_audit::ui::{
    evaluate_classifier, kappa_from_double_coded, read_gold_jsonl, stratified_macro_f1,
    train_classifier, weak_label, ClassifierMetrics, TrainConfig, UiFeatureVector,
    DEFAULT_BOOTSTRAP_DRAWS,
};

use crate::commands::Ctx;
use crate::report::{self, fmt_f64};

#[derive(Debug, Args)]
pub struct ClassifyUiArgs {
    /// Gold labels JSONL; enables metrics, confusion, and κ outputs.
    #[arg(long, value_name = "FILE")]
    gold: Option<PathBuf>,

    /// Bootstrap draws behind each metric interval.
    #[arg(long, default_value_t = DEFAULT_BOOTSTRAP_DRAWS, value_name = "N")]
    bootstrap_draws: usize,
}

/// One labeled snapshot, as exchanged with the `panel` command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelRow {
    pub site_id: String,
    pub month: u32,
    #[serde(flatten)]
    pub label: PatternLabel,
}

struct Featured {
    site_id: String,
    month: u32,
    vendor: String,
    features: UiFeatureVector,
}

pub fn run(ctx: &Ctx, args: &ClassifyUiArgs) -> Result<()> {
    let store = ctx.open_nonempty_store()?;
    let out = ctx.out_dir()?;
    let seed = ctx.seed();

    let mut featured: Vec<Featured> = Vec::new();
    for rec in store.records() {
        if !rec.banner_surfaced {
            continue;
        }
        let Some(features) = snapshot_features(&store, rec, &ctx.config.actions)? else {
            continue;
        };
        featured.push(Featured {
            site_id: rec.key.site_id.clone(),
            month: rec.key.month,
            vendor: rec.vendor.clone().unwrap_or_else(|| "unknown".into()),
            features,
        });
    }
    if featured.is_empty() {
        bail!("no surfaced snapshots with a consent DOM in the store");
    }

    let mut train: Vec<(UiFeatureVector, Pattern)> = Vec::new();
    let mut weak_counts = [0usize; Pattern::COUNT];
    let mut abstained = 0usize;
    for f in &featured {
        match weak_label(&f.features).resolved {
            Some(label) => {
                weak_counts[label.pattern.index()] += 1;
                train.push((f.features.clone(), label.pattern));
            }
            None => abstained += 1,
        }
    }
    let model = train_classifier(&train, seed, &TrainConfig::default())
        .context("training the pattern classifier on weak labels")?;
    model.save(&out.join("model.json"))?;

    let label_rows: Vec<LabelRow> = featured
        .iter()
        .map(|f| LabelRow {
            site_id: f.site_id.clone(),
            month: f.month,
            label: model.predict(&f.features),
        })
        .collect();
    report::write_jsonl(&out.join("labels.jsonl"), &label_rows)?;

    let mut gold_n = None;
    let mut kappa = None;
    if let Some(gold_path) = &args.gold {
        let gold = read_gold_jsonl(gold_path)?;
        if gold.is_empty() {
            bail!("gold file {} has no records", gold_path.display());
        }
        let by_key: BTreeMap<(&str, u32), &Featured> = featured
            .iter()
            .map(|f| ((f.site_id.as_str(), f.month), f))
            .collect();
        let mut eval_pairs: Vec<(UiFeatureVector, Pattern)> = Vec::new();
        let mut vendor_pairs: Vec<(String, Pattern, Pattern)> = Vec::new();
        let mut missing: Vec<String> = Vec::new();
        for g in &gold {
            match by_key.get(&(g.site_id.as_str(), g.month)) {
                Some(f) => {
                    let predicted = model.predict(&f.features).pattern;
                    eval_pairs.push((f.features.clone(), g.label));
                    vendor_pairs.push((f.vendor.clone(), g.label, predicted));
                }
                None => missing.push(format!("{}@m{}", g.site_id, g.month)),
            }
        }
        if !missing.is_empty() {
            bail!(
                "{} gold row(s) have no surfaced snapshot in the store: {}",
                missing.len(),
                missing.join(", ")
            );
        }

        let metrics = evaluate_classifier(&model, &eval_pairs, args.bootstrap_draws, seed)?;
        kappa = kappa_from_double_coded(&gold)?;
        write_metrics_reports(out, seed, &metrics, kappa)?;

        let vendor_rows: Vec<Vec<String>> = stratified_macro_f1(&vendor_pairs)
            .into_iter()
            .map(|(vendor, f1)| {
                let n = vendor_pairs.iter().filter(|(v, _, _)| *v == vendor).count();
                vec![vendor, n.to_string(), fmt_f64(f1)]
            })
            .collect();
        report::write_csv(
            &out.join("vendor_f1.csv"),
            seed,
            &["vendor", "gold_n", "macro_f1"],
            &vendor_rows,
        )?;
        gold_n = Some(gold.len());
    }

    let weak_by_pattern: BTreeMap<String, usize> = Pattern::ALL
        .iter()
        .map(|p| (p.to_string(), weak_counts[p.index()]))
        .collect();
    report::write_json(
        &out.join("summary.json"),
        seed,
        serde_json::json!({
            "command": "classify-ui",
            "surfaced": featured.len(),
            "weak_labeled": train.len(),
            "weak_abstained": abstained,
            "weak_by_pattern": weak_by_pattern,
            "labels": label_rows.len(),
            "gold": gold_n,
            "kappa": kappa,
        }),
    )?;
    println!(
        "classify-ui: labeled {} snapshot(s); weak rules resolved {} ({} abstained)",
        label_rows.len(),
        train.len(),
        abstained
    );
    Ok(())
}

fn write_metrics_reports(
    out: &std::path::Path,
    seed: u64,
    metrics: &ClassifierMetrics,
    kappa: Option<f64>,
) -> Result<()> {
    report::write_json(
        &out.join("metrics.json"),
        seed,
        serde_json::json!({
            "kappa": kappa,
            "metrics": metrics,
        }),
    )?;

    let fmt3 = |m: &consent_audit::ui::MetricInterval| {
        vec![fmt_f64(m.estimate), fmt_f64(m.lo), fmt_f64(m.hi)]
    };
    let mut rows: Vec<Vec<String>> = metrics
        .per_class
        .iter()
        .map(|c| {
            let mut row = vec![c.pattern.to_string(), c.gold_count.to_string()];
            row.extend(fmt3(&c.precision));
            row.extend(fmt3(&c.recall));
            row.extend(fmt3(&c.f1));
            row
        })
        .collect();
    let mut macro_row = vec!["MACRO".to_string(), metrics.n.to_string()];
    macro_row.extend(fmt3(&metrics.macro_precision));
    macro_row.extend(fmt3(&metrics.macro_recall));
    macro_row.extend(fmt3(&metrics.macro_f1));
    rows.push(macro_row);
    report::write_csv(
        &out.join("table_patterns.csv"),
        seed,
        &[
            "class",
            "gold_count",
            "precision",
            "precision_lo",
            "precision_hi",
            "recall",
            "recall_lo",
            "recall_hi",
            "f1",
            "f1_lo",
            "f1_hi",
        ],
        &rows,
    )?;

    let mut columns: Vec<&str> = vec!["gold"];
    let names: Vec<String> = Pattern::ALL.iter().map(|p| p.to_string()).collect();
    columns.extend(names.iter().map(String::as_str));
    let confusion_rows: Vec<Vec<String>> = Pattern::ALL
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut row = vec![p.to_string()];
            row.extend(metrics.confusion[i].iter().map(|c| c.to_string()));
            row
        })
        .collect();
    report::write_csv(&out.join("confusion.csv"), seed, &columns, &confusion_rows)?;
    Ok(())
}
