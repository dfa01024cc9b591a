//! Command-line experiment runner.
//!
//! `run <config>` executes one experiment described by a plain-text config
//! and writes CSV artifacts; `list` prints the experiment registry. Exit
//! codes: 0 success, 2 configuration error, 3 runtime error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ghznet::experiment::{list_experiments, parse_spec, run_experiment};
use ghznet::Error;

#[derive(Parser)]
#[command(name = "ghznet", version, about = "Quantum-network entanglement distribution simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        /// Path to the config file (flat key = value with [section] headers).
        config: PathBuf,
        /// Override the seed given in the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for Monte Carlo trials (default: all cores).
        /// Results are byte-identical for any value.
        #[arg(long)]
        threads: Option<usize>,
        /// Directory for output files (created if missing).
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// List experiment kinds and their config parameters.
    List,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Parse(_) | Error::Topology(_) => 2,
        _ => 3,
    }
}

fn run(cli: Cli) -> ghznet::Result<()> {
    match cli.command {
        Command::List => {
            print!("{}", list_experiments());
            Ok(())
        }
        Command::Run { config, seed, threads, out_dir } => {
            if let Some(t) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build_global()
                    .map_err(|e| Error::Config(format!("cannot set --threads: {e}")))?;
            }
            let text = std::fs::read_to_string(&config).map_err(|e| {
                Error::Config(format!("cannot read config file {}: {e}", config.display()))
            })?;
            let spec = parse_spec(&text, seed)?;
            let outcome = run_experiment(&spec, &out_dir)?;
            for file in outcome.files {
                println!("wrote {}", file.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
