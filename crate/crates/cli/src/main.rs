//! `adsearch`: batch runner for spectra, gap envelopes, schedules and
//! dynamics of perturbed adiabatic search.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use adiabatic_search::bounds::BoundsError;
use adiabatic_search::evolution::EvolutionError;
use adiabatic_search::instance::InstanceError;
use adiabatic_search::schedule::{ScheduleError, ScheduleKind};
use adiabatic_search::spectrum::SpectrumError;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use commands::InvariantViolation;
use config::{ConfigError, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(
    name = "adsearch",
    version,
    about = "Local adiabatic schedules for perturbed search"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Lowest eigenvalue curves over an s grid.
    Spectrum,
    /// Exact gap against the straight-line envelope, with runtime estimates.
    Envelope,
    /// Build schedules and integrate the dynamics for each kind and epsilon.
    Run,
    /// Locate the minimum spectral gap.
    Mingap,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    n: Option<u32>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// One or more comma-separated values.
    #[arg(long, global = true, value_delimiter = ',')]
    epsilon: Option<Vec<f64>>,
    /// global, local-exact, local-envelope (comma-separated).
    #[arg(long, global = true, value_delimiter = ',')]
    schedule: Option<Vec<ScheduleKind>>,
    #[arg(long, global = true)]
    steps: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Use this minimum gap instead of measuring it.
    #[arg(long, global = true)]
    g_min: Option<f64>,
    /// Consecutive-gap width counted as wide by the regime check.
    #[arg(long, global = true)]
    width_threshold: Option<f64>,
}

fn classify(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if cause.is::<InvariantViolation>() {
            return "invariant-violation";
        }
        if let Some(b) = cause.downcast_ref::<BoundsError>() {
            return match b {
                BoundsError::UnsupportedRegime(_) => "unsupported-regime",
                _ => "bounds",
            };
        }
        if cause.is::<ConfigError>() || cause.is::<serde_json::Error>() {
            return "config";
        }
        if cause.is::<InstanceError>() {
            return "instance";
        }
        if cause.is::<SpectrumError>() {
            return "spectrum";
        }
        if cause.is::<ScheduleError>() {
            return "schedule";
        }
        if cause.is::<EvolutionError>() {
            return "evolution";
        }
        if cause.is::<std::io::Error>() || cause.is::<csv::Error>() {
            return "io";
        }
    }
    "internal"
}

fn execute(cli: &Cli) -> anyhow::Result<Vec<PathBuf>> {
    let c = &cli.common;
    let mut cfg = ExperimentConfig::load(c.config.as_deref())?;
    cfg.apply(&Overrides {
        n: c.n,
        seed: c.seed,
        epsilon: c.epsilon.clone(),
        schedule: c.schedule.clone(),
        steps: c.steps,
        out: c.out.clone(),
        g_min: c.g_min,
        width_threshold: c.width_threshold,
    })?;
    match cli.command {
        Command::Spectrum => commands::cmd_spectrum(&cfg),
        Command::Envelope => commands::cmd_envelope(&cfg),
        Command::Run => commands::cmd_run(&cfg),
        Command::Mingap => commands::cmd_mingap(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(files) => {
            let files: Vec<String> = files.iter().map(|p| p.display().to_string()).collect();
            println!("{}", json!({ "written": files }));
            ExitCode::SUCCESS
        }
        Err(err) => {
            let details = err
                .downcast_ref::<InvariantViolation>()
                .map(|v| v.details.clone())
                .unwrap_or_default();
            let report = json!({
                "error": classify(&err),
                "message": format!("{err:#}"),
                "details": details,
            });
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}
