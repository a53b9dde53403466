mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "tamed-geometry", version, about = "Tamedness, properness, flow and spectral checks for sampled immersions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Flags {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Exhaustion radii, comma separated.
    #[arg(long, global = true)]
    pub radii: Option<String>,
    /// Tamedness level in (0, 1).
    #[arg(long, global = true)]
    pub c: Option<f64>,
    /// Ball radius for the spectral and oracle checks.
    #[arg(long = "R", global = true)]
    pub big_r: Option<f64>,
    /// Model dimension for the radial solver.
    #[arg(long, global = true)]
    pub l: Option<usize>,
    /// Model curvature for the radial solver.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub mu: Option<f64>,
    /// Submanifold dimension for the tone bound.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// Inner radius for the tone bound.
    #[arg(long, global = true)]
    pub r0: Option<f64>,
    /// Grid resolution, e.g. 128x64.
    #[arg(long, global = true)]
    pub resolution: Option<String>,
    /// Directory for report files.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Flow step.
    #[arg(long, global = true)]
    pub step: Option<f64>,
    /// Flow time horizon.
    #[arg(long = "t-max", global = true)]
    pub t_max: Option<f64>,
    /// Number of level-set seeds to integrate.
    #[arg(long, global = true)]
    pub seeds: Option<usize>,
    /// `rho_N` radii for the end count, comma separated.
    #[arg(long = "end-radii", global = true)]
    pub end_radii: Option<String>,
    /// Relative bisection width of the radial eigenvalue solver.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// List the builtin immersions.
    Catalog,
    /// Estimate a(M) over an exhaustion.
    Tamedness,
    /// Certify properness of a tamed immersion.
    Properness,
    /// Integrate the normalised gradient flow of the extrinsic distance.
    Flow,
    /// Radial Dirichlet eigenvalue, gradient bound and tone bound.
    Spectral,
    /// Finite-element eigenvalue oracle.
    Oracle,
    /// Full pipeline: tamedness, properness, flow, tone bound, oracle.
    VerifyAll,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run::dispatch(cli.command, &cli.flags) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(run::Failure::Violated(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(run::Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
