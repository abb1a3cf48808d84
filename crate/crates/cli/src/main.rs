use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mte::experiments::{run_experiment, ExperimentConfig, ExperimentKind};

/// Ground-state preparation experiments for the long-range Ising chain.
#[derive(Debug, Parser)]
#[command(name = "mte", version, about)]
struct Cli {
    /// JSON configuration; omitted keys keep their defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Base seed for the random initial guesses.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Number of optimisation restarts.
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Skip SVG output.
    #[arg(long, global = true)]
    no_plots: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Subcommand)]
enum Command {
    /// Optimise an MTE schedule (best of several restarts) and prune it.
    Mte,
    /// Local-adiabatic ramp from the exact gap, with a linear-ramp comparison.
    LaBaseline,
    /// Translate an MTE schedule into QAOA angles.
    QaoaTranslate,
    /// Translate an MTE schedule and re-optimise the QAOA angles.
    QaoaOptimize,
    /// Fidelity over a grid of constant lambda0 and step counts.
    ConstLambda,
    /// Best fidelity against the number of steps.
    Sweep,
    /// Instantaneous-eigenstate decomposition of an optimised trajectory.
    Decompose,
}

impl From<Command> for ExperimentKind {
    fn from(c: Command) -> Self {
        match c {
            Command::Mte => ExperimentKind::Mte,
            Command::LaBaseline => ExperimentKind::LaBaseline,
            Command::QaoaTranslate => ExperimentKind::QaoaTranslate,
            Command::QaoaOptimize => ExperimentKind::QaoaOptimize,
            Command::ConstLambda => ExperimentKind::ConstLambda,
            Command::Sweep => ExperimentKind::Sweep,
            Command::Decompose => ExperimentKind::Decompose,
        }
    }
}

fn resolve(cli: &Cli) -> mte::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)
            .map_err(|e| mte::Error::Config(format!("{}: {e}", path.display())))?,
        None => ExperimentConfig::default(),
    };
    cfg.kind = cli.command.into();
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(restarts) = cli.restarts {
        cfg.mte.restarts = restarts;
    }
    if cli.no_plots {
        cfg.plots = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = resolve(&cli).and_then(|cfg| run_experiment(&cfg));
    match result {
        Ok(out) => {
            for path in out.written() {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
