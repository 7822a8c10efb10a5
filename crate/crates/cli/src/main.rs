// SPDX-License-Identifier: Apache-2.0

//! Experiment runner: parameter sweeps, single protocol runs, trajectory
//! sampling and readout tomography.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use ensemble_qip::protocol::Variant;

use crate::commands::InvariantBreach;
use crate::config::{ExperimentConfig, Grid};

#[derive(Parser)]
#[command(name = "ensemble-qip", version, about = "Parity-projection entangling simulator")]
struct Cli {
    /// JSON experiment configuration; missing fields take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout if omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// standard | deferred
    #[arg(long, global = true)]
    variant: Option<Variant>,
    /// Sweep grid start:stop:step.
    #[arg(long, global = true)]
    grid: Option<Grid>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fidelity and entanglement measures against eta1 (CSV).
    SweepEta1,
    /// Success probability, closed form and simulated (CSV).
    SweepPf,
    /// One protocol run with intermediate states and step log (JSON).
    Run {
        #[arg(long)]
        eta1: Option<f64>,
        #[arg(long)]
        eta2: Option<f64>,
    },
    /// Monte Carlo trajectories (JSON summary).
    Trajectories {
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        eta1: Option<f64>,
        #[arg(long)]
        eta2: Option<f64>,
    },
    /// Sampled readout and reconstruction: count CSV to --out, report JSON
    /// to --report (stderr if omitted).
    Tomography {
        #[arg(long)]
        runs: Option<u64>,
        #[arg(long)]
        eta1: Option<f64>,
        /// Reconstruct from this count CSV instead of simulating.
        #[arg(long)]
        counts: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(v) = cli.variant {
        cfg.variant = v;
    }
    if let Some(g) = cli.grid {
        cfg.grid = Some(g);
    }
    match &cli.command {
        Command::Run { eta1, eta2 } => {
            cfg.eta1 = eta1.unwrap_or(cfg.eta1);
            cfg.eta2 = eta2.unwrap_or(cfg.eta2);
        }
        Command::Trajectories { trials, eta1, eta2 } => {
            cfg.trials = trials.unwrap_or(cfg.trials);
            cfg.eta1 = eta1.unwrap_or(cfg.eta1);
            cfg.eta2 = eta2.unwrap_or(cfg.eta2);
        }
        Command::Tomography { runs, eta1, .. } => {
            cfg.runs = runs.unwrap_or(cfg.runs);
            cfg.eta1 = eta1.unwrap_or(cfg.eta1);
        }
        Command::SweepEta1 | Command::SweepPf => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = config(cli)?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::SweepEta1 => output::emit(out, &commands::sweep_eta1(&cfg)?),
        Command::SweepPf => output::emit(out, &commands::sweep_pf(&cfg)?),
        Command::Run { .. } => output::emit(out, &commands::run(&cfg)?),
        Command::Trajectories { .. } => output::emit(out, &commands::trajectories(&cfg)?),
        Command::Tomography { counts, report, .. } => {
            let text = match counts {
                Some(p) => Some(std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?),
                None => None,
            };
            let t = commands::tomography(&cfg, text.as_deref())?;
            output::emit(out, &t.counts_csv)?;
            match report {
                Some(p) => output::emit(Some(p), &t.report),
                None => {
                    eprint!("{}", t.report);
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<InvariantBreach>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
