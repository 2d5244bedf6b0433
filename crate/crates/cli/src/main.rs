//! Command-line driver for the consent-audit pipeline.
//!
//! The subcommands mirror the pipeline stages: `synth` fabricates a corpus
//! with a known ground truth, `ingest` copies crawl bundles into the
//! content-addressed store, `diff-policy` / `classify-ui` / `score`
//! compute the per-snapshot measures, and `panel` joins everything into
//! the site×month panel and runs the longitudinal analyses. Every report
//! records the root seed, and rerunning a command on the same inputs
//! rewrites its outputs byte-for-byte.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Ctx;
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "consent-audit",
    version,
    about = "Longitudinal audit of consent banners against privacy-policy claims"
)]
struct Cli {
    /// Snapshot store root.
    #[arg(long, global = true, env = "CONSENT_AUDIT_STORE", value_name = "DIR")]
    store: Option<PathBuf>,

    /// Directory for report outputs.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Root seed, recorded in every output header. Defaults to the
    /// scenario seed for `synth` and to 17 elsewhere.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// JSON file overriding the bundled lexicons, implication map, or
    /// similarity parameters.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic crawl corpus with a known ground truth.
    Synth(commands::synth::SynthArgs),
    /// Copy crawl bundles into the store and index them.
    Ingest(commands::ingest::IngestArgs),
    /// Align consecutive policy versions and emit churn series.
    DiffPolicy(commands::diff_policy::DiffPolicyArgs),
    /// Weak-label consent UIs, train the classifier, label every snapshot.
    ClassifyUi(commands::classify_ui::ClassifyUiArgs),
    /// Score claim–UI alignment for every snapshot.
    Score(commands::score::ScoreArgs),
    /// Build the site×month panel and run the longitudinal analyses.
    Panel(commands::panel::PanelArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match RunConfig::load(cli.config.as_deref()) {
        Ok(config) => config,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::FAILURE;
        }
    };
    let ctx = Ctx {
        store_root: cli.store,
        out: cli.out,
        seed: cli.seed,
        config,
    };
    let result = match &cli.command {
        Command::Synth(args) => commands::synth::run(&ctx, args),
        Command::Ingest(args) => commands::ingest::run(&ctx, args),
        Command::DiffPolicy(args) => commands::diff_policy::run(&ctx, args),
        Command::ClassifyUi(args) => commands::classify_ui::run(&ctx, args),
        Command::Score(args) => commands::score::run(&ctx, args),
        Command::Panel(args) => commands::panel::run(&ctx, args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
