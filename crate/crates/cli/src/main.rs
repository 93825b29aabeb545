use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cmdnls_cli::commands::{
    cmd_compare, cmd_datum_dump, cmd_evolve, cmd_formula, cmd_zd, RunContext,
};
use cmdnls_cli::config::RunConfig;

#[derive(Parser)]
#[command(
    name = "cmdnls",
    about = "Numerical laboratory for the defocusing Calogero-Moser derivative NLS \
             on a unit-modulus background",
    version
)]
struct Cli {
    /// JSON run configuration; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory (overrides the config's out_dir).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads for sweep evaluation.
    #[arg(long, global = true, default_value_t = 1, value_name = "K")]
    threads: usize,

    /// Recorded in run metadata; reserved for stochastic data generators.
    #[arg(long, global = true, default_value_t = 0, value_name = "U64")]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the PDE and write snapshots plus diagnostics CSV.
    Evolve,
    /// Evaluate the closed-form solution over the (t, z) sweep grid.
    Formula,
    /// Run both routes and report the pointwise discrepancy table.
    Compare,
    /// Sweep the dispersion parameter and tabulate the zero-dispersion gap.
    Zd,
    /// Sample the configured initial datum and write it out.
    DatumDump,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match &cli.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    };
    let config = match config {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let ctx = RunContext::new(config, cli.out, cli.threads, cli.seed);
    let result = match cli.command {
        Command::Evolve => cmd_evolve(&ctx),
        Command::Formula => cmd_formula(&ctx),
        Command::Compare => cmd_compare(&ctx),
        Command::Zd => cmd_zd(&ctx),
        Command::DatumDump => cmd_datum_dump(&ctx),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
