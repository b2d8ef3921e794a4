//! `dcjac`: batch front end for computing and verifying generalized
//! Jacobian elements and running semismooth Newton.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Exit statuses.
pub mod exit {
    pub const OK: u8 = 0;
    pub const CHECK_FAILED: u8 = 1;
    pub const INPUT: u8 = 2;
    pub const DOMAIN: u8 = 3;
    pub const SINGULAR: u8 = 4;
    pub const NOT_CONVERGED: u8 = 5;
}

#[derive(Parser, Debug)]
#[command(
    name = "dcjac",
    version,
    about = "Generalized Jacobians of differences of max-type functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute one generalized Jacobian element at a point.
    Jac(Common),
    /// Compute the element and run every verification check on it.
    Verify(VerifyArgs),
    /// Run semismooth Newton on a square problem.
    Newton(NewtonArgs),
    /// Directional derivative F'(x; y).
    Dd(DdArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ConventionArg {
    Min,
    Max,
}

impl From<ConventionArg> for dcjac::Convention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Min => dcjac::Convention::Min,
            ConventionArg::Max => dcjac::Convention::Max,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Problem file (JSON).
    #[arg(short = 'p', long, conflicts_with = "random")]
    problem: Option<PathBuf>,
    /// Point as comma-separated decimals; defaults to the origin.
    #[arg(short = 'x', long, allow_hyphen_values = true)]
    point: Option<String>,
    /// Generate a random piecewise-affine problem, e.g. `n=3,m=2,pieces=4,seed=7`.
    #[arg(long)]
    random: Option<String>,
    #[arg(long, default_value_t = dcjac::dcmax::DEFAULT_TOL_ACT)]
    tol_act: f64,
    #[arg(long, default_value_t = dcjac::dcmax::DEFAULT_TOL_TIE)]
    tol_tie: f64,
    #[arg(long, value_enum, default_value_t = ConventionArg::Min)]
    convention: ConventionArg,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Emit JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Probe radius of the brute-force oracle.
    #[arg(long, default_value_t = dcjac::oracle::DEFAULT_PROBE_RADIUS)]
    radius: f64,
    /// Cone directions to sample.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Random probes of the brute-force oracle.
    #[arg(long, default_value_t = dcjac::oracle::DEFAULT_PROBE_COUNT)]
    probes: usize,
    /// Frobenius tolerance for hull membership.
    #[arg(long, default_value_t = dcjac::oracle::DEFAULT_MEMBERSHIP_TOL)]
    membership_tol: f64,
}

#[derive(Args, Debug)]
pub struct NewtonArgs {
    #[command(flatten)]
    common: Common,
    /// Starting point; falls back to `--point`, then the origin.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    /// Stop when ‖F(x)‖∞ is at most this.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 50)]
    max_iters: usize,
    /// Solve the complementarity problem given by M.csv and q.csv.
    #[arg(long, num_args = 2, value_names = ["M.csv", "q.csv"], conflicts_with_all = ["problem", "random"])]
    ncp: Option<Vec<PathBuf>>,
}

#[derive(Args, Debug)]
pub struct DdArgs {
    #[command(flatten)]
    common: Common,
    /// Direction as comma-separated decimals.
    #[arg(short = 'y', long, allow_hyphen_values = true)]
    direction: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Jac(args) => commands::jac(args),
        Command::Verify(args) => commands::verify(args),
        Command::Newton(args) => commands::newton(args),
        Command::Dd(args) => commands::dd(args),
    };
    match result {
        Ok(out) => {
            print!("{}", out.text);
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
