//! `stieltjes`: solve and inspect measure-driven ODE problems from JSON files.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stieltjes_core::Method;

#[derive(Parser)]
#[command(
    name = "stieltjes",
    version,
    about = "Stieltjes differential equations: solvers, certificates and checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one or more problem files, writing a CSV trace and a JSON summary.
    Solve(SolveArgs),
    /// Compare Euler and Picard on a grid and on its refinement.
    Compare(CompareArgs),
    /// Measure of a union of intervals, optionally with an integral over it.
    Measure(MeasureArgs),
    /// Constancy and discontinuity sets of every derivator, with pairwise relations.
    Classify(ClassifyArgs),
    /// Numerical Osgood test for a modulus.
    CheckOsgood(OsgoodArgs),
    /// Fundamental theorem of calculus round trip for an integrand and a derivator.
    FtcCheck(FtcArgs),
}

#[derive(Args)]
struct SolverFlags {
    /// Number of grid steps (overrides the file).
    #[arg(long, value_name = "N")]
    grid: Option<usize>,
    /// Picard tolerance (overrides the file).
    #[arg(long)]
    tol: Option<f64>,
    /// Picard iteration cap (overrides the file).
    #[arg(long, value_name = "N")]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Directory receiving `<stem>.csv` and `<stem>.json`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Add the horizon and uniqueness certificates to the summary.
    #[arg(long)]
    certify: bool,
    /// Check the trace against the a-priori bound.
    #[arg(long)]
    bound: bool,
    /// Problem files solved in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Solver method (overrides the file).
    #[arg(long, value_parser = parse_method)]
    method: Option<Method>,
    /// Seed for the sampled certificates.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct CompareArgs {
    file: PathBuf,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct MeasureArgs {
    /// File with a `derivators` block.
    file: PathBuf,
    #[arg(long, value_name = "NAME")]
    derivator: String,
    /// JSON array of `[a, b]` pairs.
    #[arg(long)]
    cover: String,
    /// Expression in `t` integrated over the union.
    #[arg(long, value_name = "EXPR")]
    integrand: Option<String>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    file: PathBuf,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OsgoodArgs {
    /// `linear`, `omega_k(k)`, `power(p)` or an expression in `t`.
    modulus: String,
    #[arg(long, default_value_t = 0.5)]
    u0: f64,
    /// Also write the report as JSON.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FtcArgs {
    file: PathBuf,
    #[arg(long, value_name = "NAME")]
    derivator: String,
    /// Integrand, an expression in `t`.
    #[arg(long, value_name = "EXPR")]
    f: String,
    /// Left end (defaults to the window's).
    #[arg(long)]
    from: Option<f64>,
    /// Right end (defaults to the window's).
    #[arg(long)]
    to: Option<f64>,
    #[arg(long, default_value_t = 64)]
    samples: usize,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn parse_method(s: &str) -> Result<Method, String> {
    match s {
        "euler" => Ok(Method::Euler),
        "picard" => Ok(Method::Picard),
        other => Err(format!("unknown method `{other}` (euler or picard)")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => commands::solve(a),
        Command::Compare(a) => commands::compare(a),
        Command::Measure(a) => commands::measure(a),
        Command::Classify(a) => commands::classify(a),
        Command::CheckOsgood(a) => commands::check_osgood(a),
        Command::FtcCheck(a) => commands::ftc_check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
