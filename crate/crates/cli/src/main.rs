//! `heatmem`: experiment runner for boundary control of the heat equation with memory.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ConfigError, Overrides};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_IO: u8 = 1;

#[derive(Parser)]
#[command(name = "heatmem", version, about = "Heat equation with memory: resolvents, dynamics, moments, biorthogonal families, controls")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (TOML); defaults apply when absent.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory; overrides `output` in the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Working precision of the Gram solves: 64, 128, 256, 512 or 1024.
    #[arg(long, global = true, value_name = "BITS")]
    precision: Option<u32>,

    /// Number of modes.
    #[arg(long, global = true, value_name = "N")]
    modes: Option<usize>,

    /// Add a grid-refinement table (resolvent, simulate).
    #[arg(long, global = true)]
    refine: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Resolvent triple (a, R, L) with the closed-form oracle.
    Resolvent,
    /// Modal trajectories, representation discrepancy and deficiency.
    Simulate,
    /// Moment right-hand sides and their asymptotics.
    Moment,
    /// Minimal-norm biorthogonal family and its growth rate.
    Biorth,
    /// Minimal-norm control sweep, memory against memoryless.
    Control,
}

fn load(cli: &Cli) -> Result<config::ExperimentConfig, ConfigError> {
    let text = match &cli.config {
        Some(p) => std::fs::read_to_string(p).map_err(|e| ConfigError {
            line: None,
            message: format!("cannot read {}: {e}", p.display()),
        })?,
        None => String::new(),
    };
    let overrides = Overrides {
        out: cli.out.clone(),
        precision: cli.precision,
        modes: cli.modes,
    };
    config::parse(&text, &overrides)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            let path = cli.config.as_deref().map(|p| p.display().to_string());
            match path {
                Some(p) => eprintln!("config error: {p}: {e}"),
                None => eprintln!("config error: {e}"),
            }
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let result = match cli.command {
        Command::Resolvent => commands::resolvent(&cfg, cli.refine),
        Command::Simulate => commands::simulate(&cfg, cli.refine),
        Command::Moment => commands::moment(&cfg),
        Command::Biorth => commands::biorth(&cfg),
        Command::Control => commands::control(&cfg),
    };
    let artifacts = match result {
        Ok(a) => a,
        Err(e) => {
            eprintln!("numerical failure: {e}");
            return ExitCode::from(EXIT_NUMERICAL);
        }
    };
    match artifacts.commit(&cfg.output) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cannot write {}: {e}", cfg.output.display());
            ExitCode::from(EXIT_IO)
        }
    }
}
