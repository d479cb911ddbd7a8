//! Experiment runner: propagation, trajectories, equivariance checks,
//! residuals, the ergodic time average, the falsification table, and the
//! built-in acceptance suite.
//!
//! Exit codes: 0 on pass, 2 when a configured verdict failed, 1 on error.

mod commands;
mod config;
mod manifest;

use anyhow::Result;
use clap::{Parser, Subcommand};
use commands::RunOutcome;
use config::ExperimentConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pilotwave", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (JSON). Required by every subcommand
    /// except `suite`, which runs the built-in experiments.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the config's ensemble seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the config's output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (0 = auto). Affects speed only, never results.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate the configured state and dump norms plus the final frame.
    Propagate,
    /// Integrate sample trajectories and write them as CSV.
    Trajectories,
    /// Sample, push forward, and compare against each configured functional.
    Equivariance,
    /// Continuity-equation residuals and h estimates per functional.
    Residual,
    /// Quasi-periodic time average vs the phase average.
    Ergodic,
    /// Run the candidate table against equilibrium and print the gaps.
    Falsify,
    /// Run the built-in acceptance experiments end to end.
    Suite,
}

fn threads_in_use(requested: usize) -> usize {
    if requested > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(requested)
            .build_global()
            .ok();
    }
    rayon::current_num_threads()
}

fn run(cli: Cli) -> Result<RunOutcome> {
    let threads = threads_in_use(cli.threads);

    if let Command::Suite = cli.command {
        let out = cli.out.unwrap_or_else(|| PathBuf::from("suite-out"));
        let seed = cli.seed.unwrap_or(pilotwave::suite::DEFAULT_SEED);
        return commands::run_suite(&out, seed, threads);
    }

    let config_path = cli
        .config
        .ok_or_else(|| anyhow::anyhow!("--config <path> is required for this subcommand"))?;
    let mut config = ExperimentConfig::load(&config_path)?;
    if let Some(seed) = cli.seed {
        config.ensemble.seed = seed;
    }
    if let Some(out) = cli.out {
        config.output = out;
    }
    let seed = config.ensemble.seed;
    let config_dir = config_path
        .parent()
        .map(|p| p.to_path_buf())
        .unwrap_or_else(|| PathBuf::from("."));
    let ctx = commands::RunContext {
        config,
        config_dir: &config_dir,
        seed,
        threads,
    };

    match cli.command {
        Command::Propagate => commands::propagate(&ctx),
        Command::Trajectories => commands::trajectories(&ctx),
        Command::Equivariance => {
            commands::ensure_dim_for_ks(&ctx.config)?;
            commands::equivariance(&ctx)
        }
        Command::Residual => commands::residual(&ctx),
        Command::Ergodic => commands::ergodic(&ctx),
        Command::Falsify => commands::falsify(&ctx),
        Command::Suite => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(RunOutcome::Pass) => ExitCode::SUCCESS,
        Ok(RunOutcome::VerdictFailed) => ExitCode::from(2),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
