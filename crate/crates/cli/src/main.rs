//! `figeight`: find figure-eight orbits, scan potential families for
//! bifurcations, reduce crossings and trace the bifurcated branches.

mod commands;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use figeight::Error;

#[derive(Parser, Debug)]
#[command(name = "figeight", version, about = "Figure-eight orbits of the three-body action and their bifurcations")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Fourier truncation N (at least 8).
    #[arg(long, global = true)]
    pub modes: Option<usize>,
    /// Convergence tolerance of the Newton solves.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for randomised checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
#[value(rename_all = "snake_case")]
pub enum PotentialKind {
    Homogeneous,
    LennardJones,
}

#[derive(Args, Debug, Clone)]
pub struct PotentialArgs {
    #[arg(long, value_enum, default_value = "homogeneous")]
    pub potential: PotentialKind,
    /// Exponent of the homogeneous potential.
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Period.
    #[arg(long = "T")]
    pub period: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for a figure-eight and write its orbit file.
    Find(commands::FindArgs),
    /// Continue a family in its parameter and locate Hessian crossings.
    Scan(commands::ScanArgs),
    /// Classified Hessian spectrum of an orbit.
    Spectrum(commands::OrbitArgs),
    /// Reduced-action coefficients at a crossing.
    Reduce(commands::ReduceArgs),
    /// Follow a bifurcated branch away from a crossing.
    Trace(commands::TraceArgs),
    /// Check that an orbit is stationary and report its symmetry.
    Verify(commands::VerifyArgs),
}

/// Why a command failed.
#[derive(Debug)]
pub enum Failure {
    Core(Error),
    /// A computed quantity missed its tolerance.
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Core(e.into())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Core(e) => e.fmt(f),
            Failure::Check(msg) => f.write_str(msg),
        }
    }
}

/// Exit status: 1 for numerical failures, 2 for invalid input.
fn exit_code(failure: &Failure) -> u8 {
    let Failure::Core(e) = failure else {
        return 1;
    };
    match e {
        Error::InvalidConfig(_)
        | Error::InvalidPotential(_)
        | Error::Unsupported(_)
        | Error::Dimension(_)
        | Error::BracketOrder(_)
        | Error::Format(_)
        | Error::Json(_)
        | Error::Io(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot start {threads} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    let g = &cli.global;
    let result = commands::prepare(g).and_then(|()| match &cli.command {
        Command::Find(a) => commands::find(g, a),
        Command::Scan(a) => commands::scan(g, a),
        Command::Spectrum(a) => commands::spectrum(g, a),
        Command::Reduce(a) => commands::reduce(g, a),
        Command::Trace(a) => commands::trace(g, a),
        Command::Verify(a) => commands::verify(g, a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
