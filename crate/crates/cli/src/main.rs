//! `coherence`: runs the decoherence experiments and writes CSV/JSON data.
//!
//! Every output embeds the resolved configuration, so any output file can be
//! passed back through `--config` to reproduce it.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{Map, Value};

use commands::Context;
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "coherence", version, about = "Two-state decoherence experiments")]
struct Cli {
    /// TOML/JSON configuration, or an earlier output file to replay.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a configuration entry, e.g. `--set d=0.5`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Master random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    /// squid: use the full 1/D = 39 000 decoherence time (slow).
    #[arg(long, global = true)]
    long_run: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Damped Bloch trajectory.
    Bloch,
    /// Strong-damping decay-rate scan.
    Zeno,
    /// Decoherence rate from a pair of S-matrices.
    Smatrix,
    /// Impact-parameter decoherence rate scan and galaxy verdict.
    Gravity,
    /// Noisy adiabatic inversion of an rf-SQUID.
    Squid,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut table = match &cli.config {
        Some(path) => config::load_file(path)?,
        None => Map::new(),
    };
    for o in &cli.overrides {
        config::apply_override(&mut table, o)?;
    }
    if let Some(seed) = cli.seed {
        table.insert("seed".into(), Value::from(seed));
    }
    if cli.long_run {
        if !matches!(cli.command, Command::Squid) {
            return Err(CliError::Usage("--long-run applies to the squid subcommand only".into()));
        }
        table.insert("inverse_d".into(), Value::from(commands::squid::LONG_RUN_INVERSE_D));
    }
    let ctx = Context { out_dir: cli.out_dir };
    match cli.command {
        Command::Bloch => commands::bloch::run(&config::resolve(table)?, &ctx),
        Command::Zeno => commands::zeno::run(&config::resolve(table)?, &ctx),
        Command::Smatrix => commands::smatrix::run(&config::resolve(table)?, &ctx),
        Command::Gravity => commands::gravity::run(&config::resolve(table)?, &ctx),
        Command::Squid => commands::squid::run(&config::resolve(table)?, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
