#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "orlicz-pv", version, about = "Robust PV battery dispatch: fit, solve, validate, simulate")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value_os_t = commands::default_out())]
    out: PathBuf,

    /// Overrides `simulate.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Comma-separated slice times; overrides `output.slices`.
    #[arg(long, global = true)]
    slices: Option<String>,

    /// Solve even if the step exceeds the monotone bound.
    #[arg(long, global = true)]
    allow_unstable: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Fit (r, a, sigma) to a daily cloud-cover series.
    Fit,
    /// Solve the HJB equation and export slices.
    Solve,
    /// Compare the CIR test problem against its closed form.
    ValidateCir,
    /// Monte Carlo evaluation of the tabulated policy.
    Simulate,
}

fn main() -> ExitCode {
    // usage errors share the input-error code; clap's own 2 means fit failure here
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(commands::EXIT_INPUT) } else { ExitCode::SUCCESS };
        }
    };
    let Some(config) = cli.config.as_deref() else {
        eprintln!("error: --config <path> is required");
        return ExitCode::from(commands::EXIT_INPUT);
    };
    let result = commands::load_config(config, cli.seed, cli.slices.as_deref(), cli.allow_unstable).and_then(|cfg| {
        match cli.command {
            Command::Fit => commands::fit(&cfg, &cli.out),
            Command::Solve => commands::solve_cmd(&cfg, &cli.out),
            Command::ValidateCir => commands::validate_cir(&cfg, &cli.out),
            Command::Simulate => commands::simulate(&cfg, &cli.out),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
