//! Batch front-end: reads a JSON run configuration, runs one experiment and
//! writes CSV tables, a JSON summary of the invariant checks and a manifest
//! from which the run can be repeated bit for bit.
//!
//! Exit codes: 0 success, 2 configuration error, 3 a numerical invariant
//! failed (the summary lists which), 1 I/O failure.

pub mod commands;
pub mod config;
pub mod experiments;
pub mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde::Serialize;

pub use config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Simulate replicas and compare densities with the PDE.
    Simulate,
    /// Solve the hydrodynamic equation and report weak residuals.
    Hydro,
    /// Evaluate the rate function on the hydrodynamic path.
    Rate,
    /// Estimate relative-entropy rates of the tilted dynamics.
    Entropy,
    /// Mass, current and replacement tail experiments.
    Tails,
    /// Compare simulated small systems with the exact generator.
    Oracle,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Hydro => "hydro",
            Command::Rate => "rate",
            Command::Entropy => "entropy",
            Command::Tails => "tails",
            Command::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "epsb", version, about = "Exclusion process with slow boundary: experiments")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// Run configuration or a manifest from an earlier run.
    #[arg(long)]
    pub config: PathBuf,
    /// Master seed; overrides the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    Config { key: String, message: String },
    Numerical(epsb::Error),
    Io(String),
}

impl CliError {
    pub fn config(key: &str, message: impl Into<String>) -> Self {
        CliError::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config { key, message } => write!(f, "configuration error at `{key}`: {message}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
            CliError::Io(e) => write!(f, "i/o failure: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<epsb::Error> for CliError {
    fn from(e: epsb::Error) -> Self {
        use epsb::Error as E;
        match e {
            E::OutOfRange { name, .. } => CliError::config(name, e.to_string()),
            E::DomainError { .. }
            | E::Invalid(_)
            | E::ClassMismatch(_)
            | E::ThetaRegime { .. }
            | E::TooLarge { .. }
            | E::BoxOutOfRange { .. } => CliError::config("<run>", e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// One invariant check of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when value ≤ bound.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            bound,
            pass: value <= bound,
        }
    }

    /// Passes when value ≥ bound.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            bound,
            pass: value >= bound,
        }
    }
}

/// Result of a run: the checks and the files written to the output
/// directory, in write order.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub command: Command,
    pub checks: Vec<Check>,
    pub files: Vec<String>,
    pub values: serde_json::Map<String, serde_json::Value>,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Runs a command with an already loaded configuration.
pub fn execute(
    command: Command,
    mut cfg: RunConfig,
    seed: Option<u64>,
    workers: Option<usize>,
    out: &std::path::Path,
) -> Result<Summary, CliError> {
    if let Some(c) = &cfg.command {
        if c != command.name() {
            return Err(CliError::config(
                "command",
                format!("configuration is for '{c}', not '{}'", command.name()),
            ));
        }
    }
    cfg.command = Some(command.name().to_string());
    if let Some(s) = seed {
        cfg.seed = s;
    }
    std::fs::create_dir_all(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    let started = std::time::SystemTime::now();
    let summary = pool.install(|| commands::run(command, &cfg, out))?;
    manifest::write(out, &cfg, &summary, started)?;
    Ok(summary)
}

/// Parses arguments, runs and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = RunConfig::load(&cli.config).and_then(|cfg| execute(cli.command, cfg, cli.seed, cli.workers, &cli.out));
    match result {
        Ok(summary) => {
            for c in &summary.checks {
                println!("{} {}: {} (bound {})", if c.pass { "ok  " } else { "FAIL" }, c.name, c.value, c.bound);
            }
            if summary.passed() {
                0
            } else {
                eprintln!("invariant check failed; see {}", cli.out.join("summary.json").display());
                3
            }
        }
        Err(e) => {
            eprintln!("{e}");
            if let CliError::Numerical(_) = &e {
                let report = serde_json::json!({ "command": cli.command, "error": e.to_string() });
                let _ = std::fs::create_dir_all(&cli.out);
                let _ = std::fs::write(cli.out.join("summary.json"), format!("{report:#}\n"));
            }
            e.exit_code()
        }
    }
}
