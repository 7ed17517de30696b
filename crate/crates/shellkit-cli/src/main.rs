//! `shellkit <command> --config <path> [--out <path>] [--seed <u64>]`
//!
//! Exit status: 0 on success, 1 on configuration or I/O errors, 2 on numerical failures.

mod commands;
mod config;
mod report;

use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use shellkit::ShellError;

use crate::config::{Resolved, RunConfig};

/// Report to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Geometry,
    Identities,
    Strains,
    Energy,
    Coercivity,
    Invariance,
    Minimize,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Geometry => "geometry",
            Command::Identities => "identities",
            Command::Strains => "strains",
            Command::Energy => "energy",
            Command::Coercivity => "coercivity",
            Command::Invariance => "invariance",
            Command::Minimize => "minimize",
        }
    }

    /// Configuration blocks that must be present.
    pub fn required_blocks(&self) -> &'static [&'static str] {
        match self {
            Command::Geometry | Command::Identities => &["surface", "grid"],
            Command::Strains => &["surface", "deformation", "grid"],
            Command::Energy => &["surface", "deformation", "material", "variant", "grid"],
            Command::Coercivity => &["surface", "material", "variant", "grid"],
            Command::Invariance => &[],
            Command::Minimize => &["surface", "material", "variant", "grid", "dirichlet"],
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "shellkit", version, about = "Batch reports and minimization for the Cosserat shell model")]
struct Cli {
    /// Report to produce.
    #[arg(value_enum)]
    command: Command,
    /// JSON configuration file.
    #[arg(long)]
    config: String,
    /// Output path (overrides `output.path`; stdout when absent).
    #[arg(long)]
    out: Option<String>,
    /// Random seed (overrides `optimizer.seed`).
    #[arg(long)]
    seed: Option<u64>,
}

/// A failed run, classified by exit status.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Numerical(String),
}

impl Failure {
    pub fn from_shell(e: ShellError, point: Option<[f64; 2]>) -> Self {
        let msg = match point {
            Some([x1, x2]) => format!("at ({x1}, {x2}): {e}"),
            None => e.to_string(),
        };
        match e {
            ShellError::ConfigInvalid { .. } => Failure::Validation(msg),
            _ => Failure::Numerical(msg),
        }
    }

    fn exit(&self) -> ExitCode {
        match self {
            Failure::Validation(m) => {
                eprintln!("error: {m}");
                ExitCode::from(1)
            }
            Failure::Numerical(m) => {
                eprintln!("numerical failure: {m}");
                ExitCode::from(2)
            }
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("SHELLKIT_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::Validation(format!("SHELLKIT_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Validation(format!("cannot configure SHELLKIT_THREADS: {e}")))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    let text = std::fs::read_to_string(&cli.config).map_err(|e| Failure::Validation(format!("cannot read `{}`: {e}", cli.config)))?;
    let config: RunConfig = serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("malformed configuration: {e}")))?;
    let resolved = Resolved::new(cli.command, config, cli.out, cli.seed).map_err(|e| Failure::from_shell(e, None))?;
    let report = match resolved.command {
        Command::Geometry => commands::geometry(&resolved),
        Command::Identities => commands::identities(&resolved),
        Command::Strains => commands::strains(&resolved),
        Command::Energy => commands::energy(&resolved),
        Command::Coercivity => commands::coercivity(&resolved),
        Command::Invariance => commands::invariance(&resolved),
        Command::Minimize => commands::run_minimize(&resolved),
    }?;
    report::emit(&report, &resolved, resolved.command == Command::Minimize).map_err(|e| Failure::Validation(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => f.exit(),
    }
}
