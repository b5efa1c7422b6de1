//! `kirchhoff`: command-line analysis of resistive and RLC networks.
//!
//! Results go to stdout as JSON (or CSV for `laplacian --format csv`).
//! Failures go to stderr as `{"error": {"kind": .., "message": .., ..}}` with
//! exit status 1 for bad input and 2 for numerical failure.

mod commands;
mod error;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::{CmdResult, Certify};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "kirchhoff", version, about = "Laplacians, Kron reduction, boundary solves and inverse problems for electrical networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a netlist and report its structure.
    Validate { file: PathBuf },
    /// Weighted Laplacian of a resistor network.
    Laplacian {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Kron-reduce onto the boundary nodes.
    Reduce { file: PathBuf },
    /// Effective resistance between two nodes.
    Resistance {
        file: PathBuf,
        #[arg(long, value_name = "A,B")]
        between: String,
    },
    /// Solve with the netlist's boundary potentials and internal currents.
    Solve {
        file: PathBuf,
        /// Also check numerically that the solution minimizes dissipated power.
        #[arg(long)]
        certify: bool,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Prescribed-power flow by multi-start Newton.
    Powerflow {
        file: PathBuf,
        /// Random starts on top of the deterministic ones.
        #[arg(long, default_value_t = 8)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Recover edge conductances from boundary measurements.
    #[command(subcommand)]
    Inverse(InverseCommand),
    /// Steady-state analysis at a fixed angular frequency.
    #[command(subcommand)]
    Phasor(PhasorCommand),
}

#[derive(Subcommand)]
enum InverseCommand {
    /// Local identifiability of the conductances.
    Check {
        file: PathBuf,
        #[arg(long, default_value_t = 3)]
        probes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit conductances to a target boundary Laplacian.
    Fit {
        file: PathBuf,
        /// JSON file `{"nodes": [..], "matrix": [[..]]}`.
        #[arg(long)]
        target: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Return a minimum-norm fit instead of failing when the
        /// conductances are not identifiable.
        #[arg(long)]
        allow_rank_deficient: bool,
    },
}

#[derive(Subcommand)]
enum PhasorCommand {
    /// Complex Kron reduction onto the boundary nodes.
    Reduce {
        file: PathBuf,
        /// Angular frequency in rad/s; overrides the netlist's `frequency`.
        #[arg(long)]
        omega: Option<f64>,
    },
    /// Complex open-circuit solve from the netlist's boundary potentials.
    Solve {
        file: PathBuf,
        #[arg(long)]
        omega: Option<f64>,
    },
}

fn run(command: Command) -> CmdResult {
    match command {
        Command::Validate { file } => commands::validate(&file),
        Command::Laplacian { file, format } => commands::laplacian(&file, matches!(format, Format::Csv)),
        Command::Reduce { file } => commands::reduce(&file),
        Command::Resistance { file, between } => commands::resistance(&file, &between),
        Command::Solve {
            file,
            certify,
            trials,
            seed,
        } => commands::solve(&file, certify.then_some(Certify { trials, seed })),
        Command::Powerflow { file, starts, seed } => commands::powerflow(&file, starts, seed),
        Command::Inverse(InverseCommand::Check { file, probes, seed }) => {
            commands::inverse_check(&file, probes, seed)
        }
        Command::Inverse(InverseCommand::Fit {
            file,
            target,
            seed,
            allow_rank_deficient,
        }) => commands::inverse_fit(&file, &target, seed, allow_rank_deficient),
        Command::Phasor(PhasorCommand::Reduce { file, omega }) => commands::phasor_reduce(&file, omega),
        Command::Phasor(PhasorCommand::Solve { file, omega }) => commands::phasor_solve(&file, omega),
    }
}

fn fail(e: CliError) -> ExitCode {
    let _ = std::io::stderr().write_all(output::to_json(&e.to_value()).as_bytes());
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(CliError::Usage(e.render().to_string().trim_end().to_string())),
    };
    match run(cli.command) {
        Ok(out) => {
            let _ = std::io::stdout().write_all(out.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}
