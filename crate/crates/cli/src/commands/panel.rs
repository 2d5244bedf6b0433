//! `panel`: join the pipeline outputs into the site×month panel and run
//! the longitudinal analyses — prevalence, transitions, change points,
//! two-way fixed effects, the event study, and the robustness suite.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;

use consent_audit::claims::AlignmentRecord;
use consent_audit::panel::{
    apply_ipw, apply_rank_weights, build_panel, confusion_from_recalls, default_penalty,
    detect_changepoints, did_estimate, ipw_weights, mnar_gap_bound, prevalence_series,
    propagate_confusion, transition_matrix, twfe_regress, winsorize, EventStudyConfig,
    PanelRow, RegressionResult, Regressor, Response, TreatmentGroup, MIN_SERIES_LEN,
};
use consent_audit::stats::mean;
use consent_audit::types::{Pattern, PatternLabel, Region, Vertical};
use consent_audit::ui::ClassifierMetrics;

use crate::commands::classify_ui::LabelRow;
use crate::commands::diff_policy::ChurnRow;
use crate::commands::Ctx;
use crate::report::{self, fmt_f64, fmt_opt};

#[derive(Debug, Args)]
pub struct PanelArgs {
    /// labels.jsonl written by `classify-ui`.
    #[arg(long, value_name = "FILE")]
    labels: PathBuf,

    /// alignments.jsonl written by `score`.
    #[arg(long, value_name = "FILE")]
    alignments: PathBuf,

    /// churn_series.jsonl written by `diff-policy`.
    #[arg(long, value_name = "FILE")]
    churn: PathBuf,

    /// metrics.json written by `classify-ui`; enables label-noise
    /// propagation in the robustness suite.
    #[arg(long, value_name = "FILE")]
    classifier_metrics: Option<PathBuf>,

    /// Event month for the difference-in-differences analysis.
    #[arg(long, value_name = "MONTH", requires = "event_group")]
    event_month: Option<u32>,

    /// Treated group: a region (eu, us_ca, other) or a vertical
    /// (news, retail, social, video).
    #[arg(long, value_name = "GROUP", requires = "event_month")]
    event_group: Option<String>,

    /// Symmetric event window, in months either side of the event.
    #[arg(long, default_value_t = 3, value_name = "K")]
    event_window: u32,

    /// Event-study response: a | churn | reject-visible.
    #[arg(long, default_value = "reject-visible", value_name = "RESPONSE")]
    event_response: String,

    /// Winsorisation tail for the robustness fit, in percent per side.
    #[arg(long, default_value_t = 1.0, value_name = "PCT")]
    winsorize_pct: f64,

    /// Draws for label-noise propagation.
    #[arg(long, default_value_t = 200, value_name = "N")]
    confusion_draws: usize,
}

fn parse_group(s: &str) -> Result<TreatmentGroup> {
    if let Ok(region) = s.parse::<Region>() {
        return Ok(TreatmentGroup::Region(region));
    }
    if let Ok(vertical) = s.parse::<Vertical>() {
        return Ok(TreatmentGroup::Vertical(vertical));
    }
    bail!("unknown group {s:?}; expected a region (eu, us_ca, other) or a vertical (news, retail, social, video)")
}

fn parse_response(s: &str) -> Result<Response> {
    match s.to_ascii_lowercase().as_str() {
        "a" => Ok(Response::A),
        "churn" => Ok(Response::Churn),
        "reject-visible" | "reject_visible" => Ok(Response::RejectVisible),
        other => bail!("unknown response {other:?}; expected a, churn, or reject-visible"),
    }
}

/// The headline specification: all five pattern dummies against the
/// unlabeled baseline, with region, vertical, and popularity absorbed into
/// the companion month-FE fit.
fn main_regressors() -> Vec<Regressor> {
    let mut regs: Vec<Regressor> = Pattern::ALL.iter().map(|&p| Regressor::PatternDummy(p)).collect();
    regs.push(Regressor::RegionIs(Region::UsCa));
    regs.push(Regressor::RegionIs(Region::Other));
    regs.push(Regressor::VerticalIs(Vertical::Retail));
    regs.push(Regressor::VerticalIs(Vertical::Social));
    regs.push(Regressor::VerticalIs(Vertical::Video));
    regs.push(Regressor::LogRank);
    regs
}

/// Contrast specification for reweighted fits over labeled rows only:
/// Scroll-Wall is the reference class, so the dummies stay identified when
/// every row carries a label.
fn contrast_regressors() -> Vec<Regressor> {
    Pattern::ALL[1..].iter().map(|&p| Regressor::PatternDummy(p)).collect()
}

fn coefficient_rows(result: &RegressionResult) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (section, coefs) in [("within", &result.within), ("time_invariant", &result.time_invariant)] {
        for c in coefs {
            rows.push(vec![
                section.to_string(),
                c.name.clone(),
                fmt_f64(c.estimate),
                fmt_f64(c.std_error),
                fmt_f64(c.ci_lo),
                fmt_f64(c.ci_hi),
            ]);
        }
    }
    rows
}

fn load_labels(path: &Path) -> Result<BTreeMap<(String, u32), PatternLabel>> {
    let rows: Vec<LabelRow> = report::read_jsonl(path)?;
    let mut map = BTreeMap::new();
    for row in rows {
        if map.insert((row.site_id.clone(), row.month), row.label).is_some() {
            bail!("duplicate label for {}@m{} in {}", row.site_id, row.month, path.display());
        }
    }
    Ok(map)
}

fn load_churn(path: &Path) -> Result<BTreeMap<(String, u32), f64>> {
    let rows: Vec<ChurnRow> = report::read_jsonl(path)?;
    let mut map = BTreeMap::new();
    for row in rows {
        if map.insert((row.site_id.clone(), row.month), row.churn).is_some() {
            bail!("duplicate churn point for {}@m{} in {}", row.site_id, row.month, path.display());
        }
    }
    Ok(map)
}

/// Reads per-class recalls out of a classify-ui metrics.json (either the
/// wrapped `{"metrics": …}` form or a bare ClassifierMetrics document).
fn load_recalls(path: &Path) -> Result<[f64; Pattern::COUNT]> {
    let raw = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&raw)
        .with_context(|| format!("parsing {}", path.display()))?;
    let inner = value.get("metrics").unwrap_or(&value).clone();
    let metrics: ClassifierMetrics = serde_json::from_value(inner)
        .with_context(|| format!("{} is not a classifier metrics document", path.display()))?;
    let mut recalls = [0.0; Pattern::COUNT];
    let mut seen = [false; Pattern::COUNT];
    for class in &metrics.per_class {
        recalls[class.pattern.index()] = class.recall.estimate;
        seen[class.pattern.index()] = true;
    }
    if seen.iter().any(|s| !s) {
        bail!("{} is missing per-class recall entries", path.display());
    }
    Ok(recalls)
}

pub fn run(ctx: &Ctx, args: &PanelArgs) -> Result<()> {
    let store = ctx.open_nonempty_store()?;
    let out = ctx.out_dir()?;
    let seed = ctx.seed();

    let labels = load_labels(&args.labels)?;
    let alignments: Vec<AlignmentRecord> = report::read_jsonl(&args.alignments)?;
    let churn = load_churn(&args.churn)?;
    let rows = build_panel(&store, &alignments, &labels, &churn)?;

    report::write_jsonl(&out.join("panel.jsonl"), &rows)?;
    write_panel_csv(out, seed, &rows)?;
    write_prevalence_csv(out, seed, &rows)?;
    write_transitions_csv(out, seed, &rows)?;
    write_changepoints_json(out, seed, &rows)?;

    let fit = twfe_regress(&rows, Response::A, &main_regressors())?;
    report::write_csv(
        &out.join("twfe.csv"),
        seed,
        &["section", "name", "estimate", "std_error", "ci_lo", "ci_hi"],
        &coefficient_rows(&fit),
    )?;
    report::write_json(&out.join("twfe.json"), seed, serde_json::to_value(&fit)?)?;

    let mut event_summary = None;
    if let (Some(event_month), Some(group)) = (args.event_month, &args.event_group) {
        let config = EventStudyConfig {
            response: parse_response(&args.event_response)?,
            event_month,
            window: args.event_window,
            group: parse_group(group)?,
        };
        let study = did_estimate(&rows, &config)?;
        let event_rows: Vec<Vec<String>> = study
            .coefficients
            .iter()
            .map(|c| {
                vec![
                    c.relative_month.to_string(),
                    fmt_f64(c.estimate),
                    fmt_f64(c.std_error),
                    fmt_f64(c.ci_lo),
                    fmt_f64(c.ci_hi),
                    c.reference.to_string(),
                ]
            })
            .collect();
        report::write_csv(
            &out.join("event_study.csv"),
            seed,
            &["relative_month", "estimate", "std_error", "ci_lo", "ci_hi", "reference"],
            &event_rows,
        )?;
        report::write_json(&out.join("event_study.json"), seed, serde_json::to_value(&study)?)?;
        event_summary = Some(serde_json::json!({
            "level_shift": study.level_shift.estimate,
            "pre_trend_p": study.pre_trend_p,
        }));
    }

    let robustness = run_robustness(ctx, args, &rows)?;
    report::write_json(&out.join("robustness.json"), seed, robustness)?;

    let labeled = rows.iter().filter(|r| r.pattern.is_some()).count();
    let sites: std::collections::BTreeSet<&str> =
        rows.iter().map(|r| r.site_id.as_str()).collect();
    let months: std::collections::BTreeSet<u32> = rows.iter().map(|r| r.month).collect();
    report::write_json(
        &out.join("summary.json"),
        seed,
        serde_json::json!({
            "command": "panel",
            "rows": rows.len(),
            "sites": sites.len(),
            "months": months.len(),
            "labeled": labeled,
            "with_score": rows.iter().filter(|r| r.a.is_some()).count(),
            "with_churn": rows.iter().filter(|r| r.churn.is_some()).count(),
            "event_study": event_summary,
        }),
    )?;
    println!(
        "panel: {} row(s) over {} site(s) × {} month(s); {} labeled",
        rows.len(),
        sites.len(),
        months.len(),
        labeled
    );
    Ok(())
}

fn write_panel_csv(out: &Path, seed: u64, rows: &[PanelRow]) -> Result<()> {
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let (pattern, source, confidence) = match &r.pattern {
                Some(l) => (
                    l.pattern.to_string(),
                    serde_json::to_value(l.source)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_string))
                        .unwrap_or_default(),
                    fmt_f64(l.confidence),
                ),
                None => (String::new(), String::new(), String::new()),
            };
            let predicates = r.predicates.as_ref();
            let fmt_pred = |get: fn(&consent_audit::claims::PredicateSet) -> bool| {
                predicates.map(|p| get(p).to_string()).unwrap_or_default()
            };
            vec![
                r.site_id.clone(),
                r.month.to_string(),
                r.region.to_string(),
                r.vertical.to_string(),
                r.rank.to_string(),
                pattern,
                source,
                confidence,
                fmt_opt(r.a),
                fmt_opt(r.churn),
                r.banner_surfaced.to_string(),
                fmt_pred(|p| p.default_off),
                fmt_pred(|p| p.reject_all_visible),
                fmt_pred(|p| p.steps_to_reject_le2),
                fmt_pred(|p| p.reopen_affordance),
                fmt_f64(r.weight),
            ]
        })
        .collect();
    report::write_csv(
        &out.join("panel.csv"),
        seed,
        &[
            "site_id",
            "month",
            "region",
            "vertical",
            "rank",
            "pattern",
            "label_source",
            "confidence",
            "A",
            "churn",
            "banner_surfaced",
            "default_off",
            "reject_all_visible",
            "steps_to_reject_le2",
            "reopen_affordance",
            "weight",
        ],
        &csv_rows,
    )
}

fn write_prevalence_csv(out: &Path, seed: u64, rows: &[PanelRow]) -> Result<()> {
    let shares = prevalence_series(rows);
    let mut labeled_by_month: BTreeMap<u32, usize> = BTreeMap::new();
    for r in rows {
        if r.banner_surfaced && r.pattern.is_some() {
            *labeled_by_month.entry(r.month).or_default() += 1;
        }
    }
    let csv_rows: Vec<Vec<String>> = shares
        .iter()
        .map(|(month, share)| {
            let mut row = vec![
                month.to_string(),
                labeled_by_month.get(month).copied().unwrap_or(0).to_string(),
            ];
            row.extend(share.iter().map(|&s| fmt_f64(s)));
            row
        })
        .collect();
    let mut columns: Vec<&str> = vec!["month", "labeled"];
    let names: Vec<String> = Pattern::ALL.iter().map(|p| p.to_string()).collect();
    columns.extend(names.iter().map(String::as_str));
    report::write_csv(&out.join("prevalence.csv"), seed, &columns, &csv_rows)
}

fn write_transitions_csv(out: &Path, seed: u64, rows: &[PanelRow]) -> Result<()> {
    let matrix = transition_matrix(rows);
    let mut csv_rows = Vec::new();
    for (i, from) in Pattern::ALL.iter().enumerate() {
        for (j, to) in Pattern::ALL.iter().enumerate() {
            csv_rows.push(vec![
                from.to_string(),
                to.to_string(),
                matrix.counts[i][j].to_string(),
                fmt_opt(matrix.probs[i].map(|p| p[j])),
            ]);
        }
    }
    report::write_csv(
        &out.join("transitions.csv"),
        seed,
        &["from", "to", "count", "probability"],
        &csv_rows,
    )
}

/// Change points over the monthly mean churn series.
fn write_changepoints_json(out: &Path, seed: u64, rows: &[PanelRow]) -> Result<()> {
    let mut by_month: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for r in rows {
        if let Some(c) = r.churn {
            by_month.entry(r.month).or_default().push(c);
        }
    }
    let months: Vec<u32> = by_month.keys().copied().collect();
    let series: Vec<f64> = by_month
        .values()
        .map(|v| mean(v).expect("non-empty month bucket"))
        .collect();

    let payload = if series.len() < MIN_SERIES_LEN {
        serde_json::json!({
            "months": months,
            "mean_churn": series,
            "note": format!("need at least {MIN_SERIES_LEN} monthly observations"),
        })
    } else {
        let penalty = default_penalty(&series);
        let indices = detect_changepoints(&series, penalty)?;
        let change_months: Vec<u32> = indices.iter().map(|&i| months[i]).collect();
        serde_json::json!({
            "months": months,
            "mean_churn": series,
            "penalty": penalty,
            "changepoint_indices": indices,
            "changepoint_months": change_months,
        })
    };
    report::write_json(&out.join("changepoints.json"), seed, payload)
}

fn run_robustness(ctx: &Ctx, args: &PanelArgs, rows: &[PanelRow]) -> Result<serde_json::Value> {
    let seed = ctx.seed();
    let mut sections = serde_json::Map::new();

    // Winsorised A: clamp the score tails, refit the headline spec.
    let lower = args.winsorize_pct;
    let upper = 100.0 - args.winsorize_pct;
    let a_values: Vec<f64> = rows.iter().filter_map(|r| r.a).collect();
    if !a_values.is_empty() {
        let clamped = winsorize(&a_values, lower, upper)?;
        let mut winsorized = rows.to_vec();
        let mut next = clamped.into_iter();
        for row in winsorized.iter_mut() {
            if row.a.is_some() {
                row.a = next.next();
            }
        }
        let fit = twfe_regress(&winsorized, Response::A, &main_regressors())?;
        sections.insert(
            "winsorized".into(),
            serde_json::json!({
                "tail_pct": args.winsorize_pct,
                "within": fit.within,
            }),
        );
    }

    // Popularity weights: 1/log2(rank+1), normalized to mean one.
    let mut rank_weighted = rows.to_vec();
    apply_rank_weights(&mut rank_weighted);
    let fit = twfe_regress(&rank_weighted, Response::A, &main_regressors())?;
    sections.insert(
        "rank_weighted".into(),
        serde_json::json!({ "within": fit.within }),
    );

    // IPW for surfacing selection: balance diagnostics plus a reweighted
    // contrast fit over labeled rows (Scroll-Wall reference).
    let covariates = [
        Regressor::RegionIs(Region::UsCa),
        Regressor::RegionIs(Region::Other),
        Regressor::VerticalIs(Vertical::Retail),
        Regressor::VerticalIs(Vertical::Social),
        Regressor::VerticalIs(Vertical::Video),
        Regressor::LogRank,
    ];
    let ipw = ipw_weights(rows, &covariates)?;
    let mut weighted = rows.to_vec();
    apply_ipw(&mut weighted, &ipw)?;
    let labeled: Vec<PanelRow> = weighted
        .into_iter()
        .filter(|r| r.pattern.is_some())
        .collect();
    let reweighted_fit = twfe_regress(&labeled, Response::A, &contrast_regressors())?;
    sections.insert(
        "ipw".into(),
        serde_json::json!({
            "balance": ipw.balance,
            "reference_class": Pattern::ALL[0].to_string(),
            "reweighted_within": reweighted_fit.within,
        }),
    );

    // MNAR worst case: how much of each region gap adversarial imputation
    // of the missing snapshots could eat.
    let mut mnar = Vec::new();
    for (a, b) in [
        (Region::Eu, Region::UsCa),
        (Region::Eu, Region::Other),
        (Region::UsCa, Region::Other),
    ] {
        mnar.push(serde_json::to_value(mnar_gap_bound(rows, a, b)?)?);
    }
    sections.insert("mnar_bounds".into(), serde_json::Value::Array(mnar));

    // Label noise: resample labels through the measured confusion and
    // watch the pattern analyses move.
    if let Some(metrics_path) = &args.classifier_metrics {
        let recalls = load_recalls(metrics_path)?;
        let confusion = confusion_from_recalls(&recalls)?;
        let summary = propagate_confusion(rows, &confusion, args.confusion_draws, seed)?;
        sections.insert("label_noise".into(), serde_json::to_value(summary)?);
    }

    Ok(serde_json::Value::Object(sections))
}
