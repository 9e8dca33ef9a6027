use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use ane_cli::config::RunConfig;
use ane_cli::reproduce;
use ane_cli::runner::{self, Outcome};

/// Adaptive two-layer ReLU least-squares approximation.
#[derive(Debug, Parser)]
#[command(name = "ane", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Output directory for run artifacts.
    #[arg(long, env = "ANE_OUT")]
    out: Option<PathBuf>,
    /// Seed override for randomized initializations.
    #[arg(long, env = "ANE_SEED")]
    seed: Option<u64>,
    /// Accepted for interface compatibility; reductions are sequential and
    /// deterministic, so extra threads are not used.
    #[arg(long, env = "ANE_THREADS")]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute the run described by a config file.
    Run {
        /// Path to the TOML run configuration.
        #[arg(long, env = "ANE_CONFIG")]
        config: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run a bundled comparison battery and emit its merged CSV.
    Reproduce {
        /// One of: t1-fixed-vs-adaptive, t2-global-init,
        /// t3-integration-effect, t4-uniform-vs-amr.
        table: String,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Load a model checkpoint and report its accuracy on a fresh mesh.
    Eval {
        /// Path to the TOML run configuration (supplies the target).
        #[arg(long, env = "ANE_CONFIG")]
        config: PathBuf,
        /// Path to the model checkpoint to evaluate.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Per-axis cell counts of the evaluation mesh, e.g. `1000,1000`.
        #[arg(long, value_delimiter = ',')]
        mesh: Option<Vec<usize>>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn note_threads(threads: Option<usize>) {
    if let Some(t) = threads {
        if t > 1 {
            eprintln!("note: --threads {t} requested; runs are single-threaded for determinism");
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config, common } => {
            note_threads(common.threads);
            let mut cfg = RunConfig::from_path(&config)?;
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            let out_dir = runner::resolve_out_dir(common.out, &cfg);
            match runner::execute(&cfg, &out_dir)? {
                Outcome::ToleranceMet => Ok(ExitCode::SUCCESS),
                Outcome::ToleranceNotMet => Ok(ExitCode::from(2)),
            }
        }
        Command::Reproduce { table, common } => {
            note_threads(common.threads);
            let out_dir = common.out.unwrap_or_else(|| PathBuf::from("ane-out"));
            reproduce::run_table(&table, &out_dir, common.seed.unwrap_or(0))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval { config, checkpoint, mesh, common } => {
            note_threads(common.threads);
            let mut cfg = RunConfig::from_path(&config)?;
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            let out_dir = runner::resolve_out_dir(common.out, &cfg);
            runner::evaluate_checkpoint(&cfg, &checkpoint, mesh, &out_dir)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
