use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use flock_cli::commands::{cmd_certify, cmd_run, cmd_sweep, GridOverrides};

/// Delayed Cucker-Smale flocking: simulate, certify, and sweep.
#[derive(Parser)]
#[command(name = "flock", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON run configuration.
    config: PathBuf,
    /// Output file (CSV for run/sweep, JSON report for certify).
    #[arg(long)]
    out: PathBuf,
    /// Row stride over integration steps (overrides the config).
    #[arg(long)]
    stride: Option<usize>,
    /// Steps per delay (overrides the config).
    #[arg(long = "h-divisor")]
    h_divisor: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate and write the diagnostic CSV plus a metadata sidecar.
    Run(CommonArgs),
    /// Certify, verify every inequality, and write the JSON report.
    Certify(CommonArgs),
    /// Simulate once per configured exponent and write the summary CSV.
    Sweep(CommonArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    type Runner = fn(&std::path::Path, &std::path::Path, &GridOverrides) -> Result<i32, flock_cli::CliError>;
    let (args, runner): (&CommonArgs, Runner) = match &cli.command {
        Command::Run(args) => (args, cmd_run),
        Command::Certify(args) => (args, cmd_certify),
        Command::Sweep(args) => (args, cmd_sweep),
    };
    let overrides = GridOverrides {
        stride: args.stride,
        h_divisor: args.h_divisor,
    };
    match runner(&args.config, &args.out, &overrides) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
