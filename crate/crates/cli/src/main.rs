use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nudge_cli::config::ExperimentConfig;
use nudge_cli::pipeline::{load_audit, Pipeline};
use nudge_cli::report::{audit_table, sentiment_table, Format};
use nudge_cli::{CliError, StageName};

#[derive(Debug, Parser)]
#[command(
    name = "nudge",
    version,
    about = "Run and report news-nudge field experiments"
)]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run directory for stage outputs and the manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Rerun stages even when their inputs are unchanged.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the cohort from the candidate table.
    Cohort,
    /// Randomize the cohort into arms and check balance.
    Assign,
    /// Run the simulated deployment.
    Simulate,
    /// Compute pre/post engagement and outcome deltas.
    Measure,
    /// Entropy balancing and G-computation effect estimates.
    Estimate,
    /// Render report tables.
    Report {
        /// Only emit this format (csv, json, text).
        #[arg(long)]
        format: Option<Format>,
    },
    /// Print the reply audit and sentiment tables.
    Audit {
        #[arg(long)]
        format: Option<Format>,
    },
    /// Run every stage in order.
    Run,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::config("--config is required"))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = load_config(&cli)?;
    let stages = match &cli.command {
        Command::Cohort => vec![StageName::Cohort],
        Command::Assign => vec![StageName::Assign],
        Command::Simulate => vec![StageName::Simulate],
        Command::Measure => vec![StageName::Measure],
        Command::Estimate => vec![StageName::Estimate],
        Command::Report { format } => {
            if let Some(f) = format {
                cfg.report.formats = vec![*f];
            }
            vec![StageName::Report]
        }
        Command::Run => StageName::ALL.to_vec(),
        Command::Audit { format } => {
            let (audit, sentiment) =
                load_audit(&cfg).map_err(|e| CliError::config(e.to_string()))?;
            if audit.is_none() && sentiment.is_none() {
                return Err(CliError::config(
                    "set paths.annotations or paths.sentiment_labels",
                ));
            }
            let format = format.unwrap_or(Format::Text);
            let tables = audit
                .iter()
                .map(audit_table)
                .chain(sentiment.iter().map(sentiment_table));
            for t in tables {
                print!("{}", t.render(format));
            }
            return Ok(());
        }
    };
    let mut p = Pipeline::open(cfg, &cli.out, cli.force)?;
    p.run(&stages)?;
    for stage in &stages {
        if let Some(r) = p.manifest().stages.get(stage) {
            let status = if r.skipped { "unchanged" } else { "done" };
            eprintln!(
                "{stage}: {status} ({} ms, {} files)",
                r.wall_ms,
                r.outputs.len()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
