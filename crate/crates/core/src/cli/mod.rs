//! Command-line front end: `ingest`, `train`, `evaluate`, `grid`,
//! `recommend`.
//!
//! Exit codes: 0 success, 2 input or validation error, 3 runtime failure.

mod commands;
mod config;
mod pipeline;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::Recommender;
pub use config::{FeaturePaths, ModelKind, RunConfig};
pub use pipeline::{load_bundle, load_dataset, prepare, Prepared};

use crate::error::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "nftrec", version, about = "Graph collaborative filtering for NFT marketplaces")]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Top-level seed; overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config's `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a transaction CSV into a dataset file and print its statistics.
    Ingest {
        csv: PathBuf,
        /// Keep items with at least this many distinct buyers.
        #[arg(long, default_value_t = crate::dataset::DEFAULT_MIN_ITEM_INTERACTIONS)]
        min_interactions: usize,
        /// Dataset label for the statistics table.
        #[arg(long)]
        name: Option<String>,
    },
    /// Train the configured model; writes checkpoint, report and test metrics.
    Train,
    /// Compare models on the test split, or score one checkpoint.
    Evaluate {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Comma-separated models, overriding the config's `models`.
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<String>>,
    },
    /// Grid search ranked by validation NDCG@20.
    Grid,
    /// Top-K items for one wallet, excluding its train items.
    Recommend {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        user: String,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return EXIT_INPUT;
            }
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
    };
    match dispatch(cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_input_error() {
                EXIT_INPUT
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

fn require_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("this command needs --config <path>".into()))?;
    RunConfig::load(path)
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Ingest {
            csv,
            min_interactions,
            name,
        } => {
            let dir = commands::default_out(None, cli.out.clone());
            commands::cmd_ingest(csv, *min_interactions, name.as_deref(), &dir, stdout)
        }
        Command::Train => {
            let cfg = require_config(&cli)?;
            let seed = cli.seed.unwrap_or(cfg.seed);
            let dir = commands::default_out(Some(&cfg), cli.out.clone());
            commands::cmd_train(&cfg, seed, &dir, stdout)
        }
        Command::Evaluate { checkpoint, models } => {
            let mut cfg = require_config(&cli)?;
            if let Some(m) = models {
                cfg.models = m.clone();
                cfg.validate()?;
            }
            let seed = cli.seed.unwrap_or(cfg.seed);
            let dir = commands::default_out(Some(&cfg), cli.out.clone());
            commands::cmd_evaluate(&cfg, seed, checkpoint.as_deref(), &dir, stdout)
        }
        Command::Grid => {
            let cfg = require_config(&cli)?;
            let seed = cli.seed.unwrap_or(cfg.seed);
            let dir = commands::default_out(Some(&cfg), cli.out.clone());
            commands::cmd_grid(&cfg, seed, &dir, stdout)
        }
        Command::Recommend {
            checkpoint,
            user,
            k,
            json,
        } => {
            let cfg = require_config(&cli)?;
            commands::cmd_recommend(&cfg, checkpoint, user, *k, *json, stdout)
        }
    }
}
