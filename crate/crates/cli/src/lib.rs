//! `qid`: batch runner for identification-code experiments.
//!
//! Every subcommand resolves its config (JSON file, then flags), runs, and emits an
//! [`ExperimentReport`] as JSON or a CSV table. Exit codes: 0 when every verdict passes,
//! 1 on a failed verdict, 2 on usage, config or runtime errors.

pub mod commands;
mod config;
mod table;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qid_core::io::{to_json_string, ExperimentReport};

pub use config::resolve;
pub use table::items_csv;

#[derive(Debug, Parser)]
#[command(name = "qid", version, about = "Identification codes over quantum channels")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Root seed; every random draw derives from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Trial budget or Monte Carlo sample count, depending on the command.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Write the payload here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// JSON file with command parameters; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an identification code and evaluate its error probabilities.
    BuildCode(commands::build_code::BuildArgs),
    /// Capacity functionals of a channel or a correlated resource.
    Capacity(commands::capacity::CapacityArgs),
    /// Monte Carlo checks of the concentration bounds.
    Verify(commands::verify::VerifyArgs),
    /// Feedback-channel simulation.
    FeedbackSim(commands::feedback_sim::FeedbackArgs),
    /// Summarize a channel, code, strategy or report file.
    Show(commands::show::ShowArgs),
}

/// Report plus an optional command-specific CSV rendering.
pub struct CommandOutput {
    pub report: ExperimentReport,
    pub csv: Option<String>,
}

impl From<ExperimentReport> for CommandOutput {
    fn from(report: ExperimentReport) -> Self {
        Self { report, csv: None }
    }
}

/// Runs the command on the current rayon pool.
pub fn execute(cli: &Cli) -> Result<CommandOutput> {
    let g = &cli.global;
    match &cli.command {
        Command::BuildCode(a) => commands::build_code::run(g, a),
        Command::Capacity(a) => commands::capacity::run(g, a),
        Command::Verify(a) => commands::verify::run(g, a),
        Command::FeedbackSim(a) => commands::feedback_sim::run(g, a),
        Command::Show(a) => commands::show::run(g, a),
    }
}

/// The bytes written for `output` in `format`.
pub fn render(output: &CommandOutput, format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => to_json_string(&output.report)?,
        Format::Csv => match &output.csv {
            Some(s) => s.clone(),
            None => items_csv(&output.report.items)?,
        },
    })
}

/// Parses nothing: runs an already parsed command line, writes the payload, and returns
/// whether every verdict passed.
pub fn run(cli: &Cli) -> Result<bool> {
    let start = Instant::now();
    let mut output = match cli.global.threads {
        Some(0) => anyhow::bail!("--threads must be positive"),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("building the thread pool")?
            .install(|| execute(cli))?,
        None => execute(cli)?,
    };
    output.report.duration_secs = start.elapsed().as_secs_f64();
    let payload = render(&output, cli.global.format.unwrap_or(Format::Json))?;
    match &cli.global.out {
        Some(path) => fs::write(path, payload).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(payload.as_bytes())?,
    }
    let failed: Vec<&str> = output
        .report
        .verdicts
        .iter()
        .filter(|v| !v.pass)
        .map(|v| v.name.as_str())
        .collect();
    eprintln!(
        "{}: {} verdicts, {} failed, {:.2} s",
        output.report.command,
        output.report.verdicts.len(),
        failed.len(),
        output.report.duration_secs
    );
    for name in &failed {
        eprintln!("  FAIL {name}");
    }
    Ok(failed.is_empty())
}
