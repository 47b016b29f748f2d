//! The `hitsim` command-line front end.

pub mod commands;
pub mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::model::TheoryConstants;
use config::ExperimentConfig;

#[derive(Debug, Parser)]
#[command(name = "hitsim", version, about = "Particle simulation of mean-field hitting-time feedback")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML experiment manifest.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Overrides `run.out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long = "b")]
    pub b: f64,
    /// Density envelope constant; `B_tilde = 2 B_hat / (1 + beta)`.
    #[arg(long, conflicts_with = "b_tilde")]
    pub b_hat: Option<f64>,
    #[arg(long)]
    pub b_tilde: Option<f64>,
    /// Accepted for uniformity with the other subcommands.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scheme on one mesh and write the loss curve.
    Simulate(RunArgs),
    /// Paired refinement study of the loss at the evaluation time.
    Converge(RunArgs),
    /// Paired refinement study of the distances between loss curves.
    Blowup(RunArgs),
    /// Kernel density of the surviving particles at the horizon.
    Density(RunArgs),
    /// Print `T*` and the extension condition as JSON.
    Theory(TheoryArgs),
}

impl Error {
    /// Process exit status for an error.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) => 2,
            Error::Domain(_) | Error::Numeric(_) => 3,
            Error::Io(_) | Error::Json(_) => 1,
        }
    }
}

fn load(args: &RunArgs) -> Result<(ExperimentConfig, PathBuf)> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.run.seed = seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| config.run.out.clone())
        .ok_or_else(|| Error::Config("run.out: no output directory (set it or pass --out)".into()))?;
    Ok((config, out))
}

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match workers {
        Some(0) => Err(Error::Config("--workers: must be >= 1".into())),
        #[cfg(feature = "parallel")]
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Config(format!("--workers: {e}")))?
            .install(f),
        #[cfg(not(feature = "parallel"))]
        Some(_) => f(),
        None => f(),
    }
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let (config, out) = load(&args)?;
            let s = with_workers(args.workers, || commands::cmd_simulate(&config, &out))?;
            print_json(&s)
        }
        Command::Converge(args) => {
            let (config, out) = load(&args)?;
            let s = with_workers(args.workers, || commands::cmd_converge(&config, &out))?;
            print_json(&s.report)
        }
        Command::Blowup(args) => {
            let (config, out) = load(&args)?;
            let s = with_workers(args.workers, || commands::cmd_blowup(&config, &out))?;
            print_json(&s.orders)
        }
        Command::Density(args) => {
            let (config, out) = load(&args)?;
            let s = with_workers(args.workers, || commands::cmd_density(&config, &out))?;
            print_json(&s)
        }
        Command::Theory(args) => {
            let consts = match (args.b_hat, args.b_tilde) {
                (Some(b_hat), None) => TheoryConstants::new(args.beta, args.b, b_hat),
                (None, Some(b_tilde)) => TheoryConstants::from_loss_bound(args.beta, args.b, b_tilde),
                _ => Err(Error::Config("theory: pass exactly one of --b-hat and --b-tilde".into())),
            }
            .map_err(|e| match e {
                Error::Domain(msg) => Error::Config(msg),
                other => other,
            })?;
            print_json(&commands::cmd_theory(args.alpha, &consts)?)
        }
    }
}

/// Parses the arguments, runs the command and maps errors to exit codes.
pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn theory_flags() {
        let cli = Cli::try_parse_from([
            "hitsim", "theory", "--alpha", "1", "--beta", "1", "--b", "1", "--b-tilde", "1",
        ])
        .unwrap();
        assert!(execute(cli).is_ok());
        let both = Cli::try_parse_from([
            "hitsim", "theory", "--alpha", "1", "--beta", "1", "--b", "1", "--b-hat", "1",
            "--b-tilde", "1",
        ]);
        assert!(both.is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(Error::Config("x".into()).exit_code(), 2);
        assert_eq!(Error::Numeric("x".into()).exit_code(), 3);
        assert_eq!(Error::Domain("x".into()).exit_code(), 3);
    }
}
