//! `synth`: generate a synthetic crawl corpus with a known ground truth.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;

use consent_audit::synth::{generate_corpus, ScenarioSpec};

use crate::commands::Ctx;
use crate::report;

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Built-in scenario: reference, twfe, twfe-noiseless, did, did-null, ipw.
    #[arg(long, value_name = "NAME", conflicts_with = "spec")]
    preset: Option<String>,

    /// Scenario spec JSON (same shape as the scenario.json written next to
    /// a generated corpus).
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
}

pub fn run(ctx: &Ctx, args: &SynthArgs) -> Result<()> {
    let mut spec = match (&args.preset, &args.spec) {
        (Some(name), None) => ScenarioSpec::preset(name)?,
        (None, Some(path)) => {
            let raw = std::fs::read_to_string(path)
                .with_context(|| format!("reading scenario spec {}", path.display()))?;
            serde_json::from_str::<ScenarioSpec>(&raw)
                .with_context(|| format!("parsing scenario spec {}", path.display()))?
        }
        _ => bail!("exactly one of --preset or --spec is required"),
    };
    if let Some(seed) = ctx.seed {
        spec = spec.with_seed(seed);
    }

    let out = ctx.out_dir()?;
    generate_corpus(&spec, out)?;

    report::write_json(
        &out.join("summary.json"),
        spec.seed,
        serde_json::json!({
            "command": "synth",
            "scenario": spec.name,
            "sites": spec.n_sites,
            "months": spec.n_months,
            "outputs": ["scenario.json", "bundles/", "gold/gold.jsonl", "ground_truth.json"],
        }),
    )?;
    println!(
        "synth: {} — {} sites × {} months under {}",
        spec.name,
        spec.n_sites,
        spec.n_months,
        out.display()
    );
    Ok(())
}
