use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands;
use crate::config::Config;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "pharmwatch",
    version,
    about = "Detect tweets marketing opioids through rogue online pharmacies"
)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Override one setting, e.g. `--set btm.k=15`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory (same as `--set output.dir=...`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// More logging; repeat for debug output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read raw tweet JSONL into the normalized corpus.
    Ingest { inputs: Vec<PathBuf> },
    /// Keep tweets naming a configured drug and report volume per drug.
    Filter,
    /// Fit the biterm topic model and infer per-tweet topic mixtures.
    Topics,
    /// Run the annotation service.
    Serve {
        #[arg(long)]
        bind: Option<String>,
    },
    /// Collect tweets whose dominant topic was labelled relevant.
    Isolate,
    /// Build labels and metadata feature vectors.
    Features,
    /// Per-drug feature means, ratios and Welch tests.
    Stats,
    /// Train one classifier per drug.
    Train,
    /// Repeated split evaluation per drug.
    Evaluate,
    /// Every step from ingestion to evaluation, pausing at annotation gates.
    Pipeline { inputs: Vec<PathBuf> },
}

fn quote(path: &std::path::Path) -> String {
    let s = path.display().to_string();
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Parses `args` (program name first), runs the subcommand and returns its
/// summary. Help and version requests come back as `Ok`.
pub fn run<I, T>(args: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => return Ok(e.to_string()),
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    let _ = env_logger::Builder::new()
        .filter_level(match cli.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        })
        .parse_default_env()
        .try_init();

    let mut overrides = cli.overrides.clone();
    if let Some(out) = &cli.out {
        overrides.push(format!("output.dir={}", quote(out)));
    }
    match &cli.command {
        Command::Ingest { inputs } | Command::Pipeline { inputs } if !inputs.is_empty() => {
            let list: Vec<String> = inputs.iter().map(|p| quote(p)).collect();
            overrides.push(format!("input.paths=[{}]", list.join(", ")));
        }
        Command::Serve { bind: Some(bind) } => overrides.push(format!("service.bind=\"{bind}\"")),
        _ => {}
    }
    let config = Config::load(cli.config.as_deref(), &overrides)?;

    match cli.command {
        Command::Ingest { .. } => commands::ingest(&config),
        Command::Filter => commands::filter(&config),
        Command::Topics => commands::topics(&config),
        Command::Serve { .. } => commands::serve(&config),
        Command::Isolate => commands::isolate(&config),
        Command::Features => commands::features(&config),
        Command::Stats => commands::stats(&config),
        Command::Train => commands::train_models(&config),
        Command::Evaluate => commands::evaluate_models(&config),
        Command::Pipeline { .. } => commands::pipeline(&config),
    }
}
