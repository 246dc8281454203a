//! `alp`: run transfer-pricing scenario files.

mod commands;
mod format;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::SweepOverrides;
use crate::format::Precision;

#[derive(Debug, Parser)]
#[command(name = "alp", version, about = "Optimal transfer prices under a fuzzy arm's length principle")]
struct Cli {
    /// Decimals for real-valued output, or `full`.
    #[arg(long, global = true, env = "ALP_PRECISION", default_value = "6")]
    precision: Precision,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimal transfer price, gain and regime as JSON.
    Solve { file: PathBuf },
    /// CSV of the optimum over a grid of one parameter.
    Sweep {
        file: PathBuf,
        /// One of tau1, tau2, z, lambda, gamma, m, gamma_dot.
        #[arg(long)]
        param: Option<String>,
        #[arg(long, allow_negative_numbers = true)]
        from: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        to: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Analytic derivatives of the optimum next to finite differences.
    Sensitivity { file: PathBuf },
    /// Interiority conditions and boundary values over enforcement levels.
    Enforcement {
        file: PathBuf,
        #[arg(long, default_value_t = 1000)]
        grid_steps: usize,
        /// Also write the per-level optimum as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::validation(format!("{}: {e}", path.display()))
    }
}

fn run(cli: Cli) -> Result<commands::Output, Failure> {
    let prec = cli.precision;
    match cli.command {
        Command::Solve { file } => commands::solve(&scenario::load(&file)?, prec),
        Command::Sweep { file, param, from, to, steps, out } => {
            let o = SweepOverrides { param, from, to, steps };
            commands::sweep(&scenario::load(&file)?, &o, out.as_deref(), prec)
        }
        Command::Sensitivity { file } => commands::sensitivity(&scenario::load(&file)?, prec),
        Command::Enforcement { file, grid_steps, csv } => {
            commands::enforcement(&scenario::load(&file)?, grid_steps, csv.as_deref(), prec)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(out) => {
            if let Err(e) = commands::emit(&out) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            ExitCode::from(out.code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
