//! Command-line front end: experiment configs in, deterministic
//! pipelines out. Exit codes: 0 success, 2 configuration or assumption
//! failure, 3 incompatible cell average, 4 solver failure, 5 analysis
//! failure.

mod commands;
mod config;
mod field_io;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "malab", version, about = "Monge-Ampère laboratory harness")]
struct Cli {
    /// Config file path or the name of a shipped preset
    /// (flat | counterexample | beta4-n3 | thm1-n3 | manufactured-2d |
    /// separable-cell).
    #[arg(long, global = true)]
    config: Option<String>,
    /// Output directory (created if missing); all artifacts land here.
    #[arg(long, global = true, default_value = "malab-out")]
    out: PathBuf,
    /// Worker threads for the numerical kernels.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the solver and corrector stopping tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Radial oracle: deviation series and decay slopes.
    Radial,
    /// Periodic cell corrector.
    Cell,
    /// Dirichlet solves (or the manufactured convergence study).
    Solve,
    /// Decomposition fits and diagnostics over solution fields.
    Analyze {
        /// Solution field files written by `solve` (.raw/.json pairs).
        fields: Vec<String>,
    },
    /// Full pipeline with per-check pass/fail flags.
    Experiment,
    /// Density hypothesis verification.
    VerifyAssumptions,
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    use malab_core::Error as E;
    if let Some(core) = err.downcast_ref::<E>() {
        match core {
            E::IncompatibleAverage(_) => 3,
            E::Stagnation { .. }
            | E::LostConvexity { .. }
            | E::LostEllipticity
            | E::LinearSolve(_)
            | E::NonFinite(_) => 4,
            E::DegenerateFit(_)
            | E::QuadratureNonConvergence(_)
            | E::OutsideHypothesis(_)
            | E::StencilOutOfRange(_) => 5,
            _ => 2,
        }
    } else {
        2
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        malab_core::parallel::configure_threads(n);
    }
    let config_arg = cli
        .config
        .as_deref()
        .ok_or_else(|| anyhow::anyhow!("--config is required"))?;
    let mut cfg = config::load(config_arg)?;
    if let Some(tol) = cli.tol {
        cfg.solver.tol = tol;
        if let Some(cell) = cfg.cell.as_mut() {
            cell.tol = tol;
        }
    }
    let out = output::prepare(&cli.out, &cfg)?;
    match &cli.command {
        Command::Radial => commands::radial::run(&cfg, &out),
        Command::Cell => commands::cell::run(&cfg, &out),
        Command::Solve => commands::solve::run(&cfg, &out),
        Command::Analyze { fields } => commands::analyze::run(&cfg, &out, fields),
        Command::Experiment => commands::experiment::run(&cfg, &out),
        Command::VerifyAssumptions => commands::verify::run(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
