//! Command-line front end for slitlab: strict TOML experiment
//! configuration, study orchestration and plot-ready CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod studies;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{load_config, parse_config, ExperimentConfig, Study};
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "slitlab",
    version,
    about = "Regularized slit diffraction experiments"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Experiment configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output root; overrides `output.directory`.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Turn acceptance thresholds into a non-zero exit code.
    #[arg(long, global = true)]
    pub check: bool,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// One regularized run; screen intensity and diagnostics.
    Simulate,
    /// Runs across the ε schedule; ‖V_ε‖∞ order and b_ε convergence.
    Sweep,
    /// Iterated Duhamel approximation against the full evolution.
    Born,
    /// Simulated screen profile against the closed-form intensity.
    Compare,
    /// Defect decay along the ε schedule for the configured test functions.
    Decay,
    /// Load and check a configuration without running anything.
    Validate {
        /// Study whose cross-field requirements apply.
        #[arg(long, value_enum, default_value = "simulate")]
        study: StudyArg,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum StudyArg {
    Simulate,
    Sweep,
    Born,
    Compare,
    Decay,
}

impl From<StudyArg> for Study {
    fn from(s: StudyArg) -> Self {
        match s {
            StudyArg::Simulate => Study::Simulate,
            StudyArg::Sweep => Study::Sweep,
            StudyArg::Born => Study::Born,
            StudyArg::Compare => Study::Compare,
            StudyArg::Decay => Study::Decay,
        }
    }
}

/// Runs the parsed command, printing progress on stdout.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let path = cli.global.config.as_ref().ok_or_else(|| {
        CliError::Validation(config::ConfigErrors(vec![
            "--config PATH is required".into()
        ]))
    })?;
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    }
    let study = match cli.command {
        Command::Validate { study } => {
            let study = study.into();
            let cfg = load_config(path, study)?;
            println!(
                "{}: valid for the {} study",
                path.display(),
                Study::name(study)
            );
            print!("{}", cfg.raw.to_toml());
            return Ok(());
        }
        Command::Simulate => Study::Simulate,
        Command::Sweep => Study::Sweep,
        Command::Born => Study::Born,
        Command::Compare => Study::Compare,
        Command::Decay => Study::Decay,
    };
    let cfg = load_config(path, study)?;
    let root = cli
        .global
        .out
        .clone()
        .unwrap_or_else(|| cfg.output_dir.clone());
    let dir = output::RunDir::create(&root, study.name(), &cfg.raw.to_toml())?;
    println!("{}: writing to {}", study.name(), dir.path().display());
    let outcome = studies::run_study(study, &cfg, &dir)?;
    for line in &outcome.summary {
        println!("  {line}");
    }
    for f in &outcome.failures {
        println!("  threshold: {f}");
    }
    if cli.global.check && !outcome.failures.is_empty() {
        return Err(CliError::Check(outcome.failures));
    }
    Ok(())
}
