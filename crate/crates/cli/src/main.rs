//! `gridsched`: community EV/HVAC scheduling and microgrid bidding from the
//! command line.

mod commands;
mod entities;
mod error;
mod forecast;
mod output;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::ScenarioFlags;
use crate::error::CliError;
use crate::sweep::SweepSpec;

#[derive(Debug, Parser)]
#[command(name = "gridsched", version, about = "Energy scheduling and bidding for homes and microgrids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Problem {
    /// Entity configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Hourly forecast table (CSV).
    #[arg(long)]
    forecasts: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct Sampling {
    /// Seed for scenario sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of scenarios to sample.
    #[arg(long = "scenarios", value_name = "N")]
    samples: Option<usize>,
    /// Number of scenarios kept after reduction.
    #[arg(long = "reduce", value_name = "K")]
    keep: Option<usize>,
}

impl From<&Sampling> for ScenarioFlags {
    fn from(s: &Sampling) -> Self {
        ScenarioFlags { seed: s.seed, samples: s.samples, keep: s.keep }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Schedule HVAC and EVs of a community and compare with uncontrolled operation.
    Schedule {
        #[command(flatten)]
        problem: Problem,
    },
    /// Solve the two-stage bidding problem of a microgrid.
    Bid {
        #[command(flatten)]
        problem: Problem,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Evaluate the coordinated, fixed-comfort and separate schemes on one scenario set.
    CompareSchemes {
        #[command(flatten)]
        problem: Problem,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Re-solve over a list of values of one parameter.
    Sweep {
        #[command(flatten)]
        problem: Problem,
        #[command(flatten)]
        sampling: Sampling,
        /// PARAM=v1,v2,... with PARAM one of w, delta, delta_t, pi, psi, v_res, p_gmax, lsf, usf.
        #[arg(long)]
        sweep: String,
    },
    /// Sample scenarios around the forecast.
    GenScenarios {
        #[arg(long)]
        forecasts: PathBuf,
        /// Optional configuration supplying uncertainty and scenario settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "scenarios", value_name = "N")]
        samples: Option<usize>,
    },
    /// Reduce a scenario file by fast forward selection.
    ReduceScenarios {
        /// Scenario CSV to reduce.
        #[arg(long)]
        input: PathBuf,
        #[arg(long = "reduce", value_name = "K")]
        keep: Option<usize>,
        /// Forecast used to normalise the distance; defaults to the scenario mean.
        #[arg(long)]
        forecasts: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the optimisation model in LP format without solving it.
    ExportModel {
        #[command(flatten)]
        problem: Problem,
        #[command(flatten)]
        sampling: Sampling,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("GRIDSCHED_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("GRIDSCHED_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size the thread pool: {e}")))
}

fn run(cmd: Command) -> Result<PathBuf, CliError> {
    configure_threads()?;
    match cmd {
        Command::Schedule { problem: p } => commands::schedule(&p.config, &p.forecasts, &p.out),
        Command::Bid { problem: p, sampling } => commands::bid(&p.config, &p.forecasts, &p.out, (&sampling).into()),
        Command::CompareSchemes { problem: p, sampling } => {
            commands::compare_schemes(&p.config, &p.forecasts, &p.out, (&sampling).into())
        }
        Command::Sweep { problem: p, sampling, sweep } => {
            let spec: SweepSpec = sweep.parse()?;
            sweep::sweep(&p.config, &p.forecasts, &p.out, (&sampling).into(), &spec)
        }
        Command::GenScenarios { forecasts, config, out, seed, samples } => {
            commands::gen_scenarios(config.as_deref(), &forecasts, &out, ScenarioFlags { seed, samples, keep: None })
        }
        Command::ReduceScenarios { input, keep, forecasts, config, out } => {
            commands::reduce_scenarios(&input, config.as_deref(), forecasts.as_deref(), &out, keep)
        }
        Command::ExportModel { problem: p, sampling } => {
            commands::export_model(&p.config, &p.forecasts, &p.out, (&sampling).into())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.render().to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::FAILURE
        }
    }
}
