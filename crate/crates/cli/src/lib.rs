//! Batch driver for the lesionkit toolkit.
//!
//! [`run`] takes an argument list and returns the process exit code, so the
//! whole command line can be exercised from tests without spawning a process.

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod dataset;
pub mod fail;

pub use config::{ToolkitConfig, CONFIG_ENV, SCHEMA_VERSION};
pub use fail::Failure;

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (config schema 1)");

#[derive(Parser, Debug)]
#[command(name = "lesionkit", version = VERSION)]
#[command(about = "Preprocess, evaluate, ensemble and postprocess brain lesion segmentations")]
pub struct Cli {
    /// JSON config file; flags given on the command line take precedence
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,

    /// Seed for every random draw (overrides `tta.seed`)
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads, 0 for one per core (overrides `threads`)
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Log more (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Reorient, resample and rescale a dataset; merge its labels
    Preprocess(commands::preprocess::Args),
    /// Label connected components and print a size table as JSON
    Components(commands::components::Args),
    /// Score predictions against ground truth
    Eval(commands::eval::Args),
    /// Apply the small-component cleanup rules
    Postprocess(commands::postprocess::Args),
    /// Fuse several predictions of one case
    Ensemble(commands::ensemble::Args),
    /// Sliding-window inference with a toy or file-based predictor
    Infer(commands::infer::Args),
    /// Loss terms of one prediction against its label map
    Loss(commands::loss::Args),
    /// Build a small-lesion dataset by masking out large lesions
    MaskSmall(commands::mask_small::Args),
    /// Print the effective configuration (defaults, file and flags) as JSON
    Config,
}

/// Parse `argv` (program name first), run the command and return the exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    init_logging(cli.verbose);
    match execute(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("{f}");
            f.exit_code()
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let mut cfg = match &cli.config {
        Some(path) => ToolkitConfig::load(path)?,
        None => ToolkitConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.tta.seed = seed;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    cfg.validate()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Failure::Invalid(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(cli.command, &mut cfg))
}

fn dispatch(command: Command, cfg: &mut ToolkitConfig) -> Result<(), Failure> {
    match command {
        Command::Preprocess(a) => commands::preprocess::run(a, cfg),
        Command::Components(a) => commands::components::run(a, cfg),
        Command::Eval(a) => commands::eval::run(a, cfg),
        Command::Postprocess(a) => commands::postprocess::run(a, cfg),
        Command::Ensemble(a) => commands::ensemble::run(a, cfg),
        Command::Infer(a) => commands::infer::run(a, cfg),
        Command::Loss(a) => commands::loss::run(a, cfg),
        Command::MaskSmall(a) => commands::mask_small::run(a, cfg),
        Command::Config => {
            println!("{}", serde_json::to_string_pretty(cfg)?);
            Ok(())
        }
    }
}
