//! `matchpert` command-line front-end.

mod commands;
mod json;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "matchpert", version, about = "Bound states of piecewise-constant potentials and their perturbation series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Secular determinant on a uniform momentum grid (CSV by default).
    Scan(RunArgs),
    /// Eigenvalues in a window with matching coefficients.
    Spectrum(RunArgs),
    /// Perturbation series for one level.
    Perturb(RunArgs),
    /// Solver against the finite-difference and shooting oracles.
    Validate(RunArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Input potential document (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    /// Momentum window, k = √(E − min H).
    #[arg(long, requires = "k_hi", conflicts_with_all = ["e_lo", "e_hi"], allow_negative_numbers = true)]
    pub k_lo: Option<f64>,
    #[arg(long, requires = "k_lo", allow_negative_numbers = true)]
    pub k_hi: Option<f64>,
    /// Energy window.
    #[arg(long, requires = "e_hi", allow_negative_numbers = true)]
    pub e_lo: Option<f64>,
    #[arg(long, requires = "e_lo", allow_negative_numbers = true)]
    pub e_hi: Option<f64>,
    /// Scan resolution (grid points).
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    /// Highest perturbation order.
    #[arg(long, default_value_t = 2)]
    pub orders: usize,
    /// Level within the window (0 = lowest).
    #[arg(long, default_value_t = 0)]
    pub level: usize,
    /// Maximum number of eigenvalues to report.
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    /// Wavefunction samples per order in `perturb` output.
    #[arg(long, default_value_t = 101)]
    pub samples: usize,
    /// Degeneracy floor on |β|.
    #[arg(long)]
    pub beta_min: Option<f64>,
    /// Condition number above which a correction system is rejected.
    #[arg(long)]
    pub condition_max: Option<f64>,
    /// Write here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Scan(args) => commands::scan(args),
        Command::Spectrum(args) => commands::spectrum(args),
        Command::Perturb(args) => commands::perturb(args),
        Command::Validate(args) => commands::validate(args),
    };
    match result {
        Ok(outcome) => {
            if let Some(note) = outcome.note {
                eprintln!("{note}");
            }
            ExitCode::from(outcome.code)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.code())
        }
    }
}
