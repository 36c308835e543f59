//! Subcommand-driven pipeline driver.
//!
//! Exit codes: 0 success, 1 data error, 2 usage or missing-dependency error.

mod config;
mod manifest;
mod stages;

use std::path::PathBuf;

use anyhow::anyhow;
use clap::{Parser, Subcommand};

use config::PipelineConfig;
use stages::Ctx;

/// A data error (exit 1) or a usage/dependency error (exit 2).
pub enum Failure {
    Data(anyhow::Error),
    Usage(anyhow::Error),
}

#[derive(Parser)]
#[command(name = "debatenet", version, about = "Retweet/reply network debate analysis pipeline")]
struct Cli {
    /// Pipeline configuration file (TOML). Required by every command except
    /// `synth`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Abort on malformed archive lines and duplicate tweet ids.
    #[arg(long, global = true)]
    strict: bool,

    /// Proceed despite stale upstream artifacts.
    #[arg(long, global = true)]
    force: bool,

    /// Override the layout / generator seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for layout and per-node assortativity jobs.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse the archive and apply the corpus filters.
    Ingest,
    /// Build the retweet network edge lists.
    RetweetNet,
    /// Reconstruct reply trees and the aggregated reply network.
    Forest,
    /// Spatialize the retweet networks.
    Layout,
    /// Assign opinion clusters from the layout and boundaries.
    Classify {
        /// Also export a deterministic random sample of classified users
        /// for manual auditing.
        #[arg(long)]
        audit_sample: Option<usize>,
    },
    /// Local assortativity profiles and histograms over the reply network.
    Assort,
    /// Engagement tables, participation tests, and the interaction matrix.
    Stats,
    /// Generate a synthetic ground-truth corpus.
    Synth {
        /// `paper-pattern` (10k users) or `small`.
        #[arg(long, default_value = "small")]
        preset: String,
        /// Output directory for the generated archive.
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate tables and figures into one report directory.
    Report,
}

fn load_ctx(cli: &Cli) -> Result<Ctx, Failure> {
    let config_path = cli.config.as_ref().ok_or_else(|| {
        Failure::Usage(anyhow!("--config is required for this command"))
    })?;
    let mut config = PipelineConfig::load(config_path)?;
    if let Some(threads) = cli.threads {
        config.layout.threads = threads;
    }
    let out = config.output_dir()?;
    std::fs::create_dir_all(&out)
        .map_err(|e| Failure::Data(anyhow!("cannot create {}: {e}", out.display())))?;
    Ok(Ctx {
        config,
        out,
        force: cli.force,
        strict: cli.strict,
        seed: cli.seed,
    })
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(threads) = cli.threads {
        // worker count never changes results, only wall time
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match &cli.command {
        Command::Ingest => stages::cmd_ingest(&load_ctx(cli)?),
        Command::RetweetNet => stages::cmd_retweet_net(&load_ctx(cli)?),
        Command::Forest => stages::cmd_forest(&load_ctx(cli)?),
        Command::Layout => stages::cmd_layout(&load_ctx(cli)?),
        Command::Classify { audit_sample } => stages::cmd_classify(&load_ctx(cli)?, *audit_sample),
        Command::Assort => stages::cmd_assort(&load_ctx(cli)?),
        Command::Stats => stages::cmd_stats(&load_ctx(cli)?),
        Command::Synth { preset, out } => {
            stages::cmd_synth(out, preset, cli.seed.unwrap_or(42))
        }
        Command::Report => stages::cmd_report(&load_ctx(cli)?),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(()) => 0,
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            1
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            2
        }
    };
    std::process::exit(code);
}
