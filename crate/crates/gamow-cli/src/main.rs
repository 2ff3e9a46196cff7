//! Batch front-end for the gamow library.
//!
//! Subcommands cover the full pipeline: chain-state evolution, density
//! decay checks, the exponential-subspace scan, line-shape tabulation, and
//! pole fitting. Every command accepts `--config file.json` supplying the
//! same keys as its flags (flags win), and emits CSV/JSON with fixed float
//! formatting so identical invocations produce byte-identical files.
//!
//! Exit codes: 0 ok, 2 usage or domain error, 3 I/O failure, 4 numerical
//! failure.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use gamow::GamowError;

#[derive(Parser)]
#[command(
    name = "gamow",
    version,
    about = "Jordan-chain resonance toolkit: semigroup evolution, decaying densities, line shapes, pole fits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a chain basis state and write the coefficient trajectory as CSV.
    Evolve(EvolveArgs),
    /// Evolve a density operator, write its norm trajectory, and report
    /// whether the decay is purely exponential.
    Density(DensityArgs),
    /// Compute a basis of all exponentially decaying operators and report it
    /// as JSON.
    Uniqueness(UniquenessArgs),
    /// Tabulate a weighted Breit-Wigner-and-derivatives line shape as CSV.
    Lineshape(LineshapeArgs),
    /// Fit pole models of increasing order to intensity data and write a
    /// JSON report.
    Fit(FitArgs),
}

#[derive(Args)]
struct EvolveArgs {
    /// Resonance energy E_R.
    #[arg(long, allow_negative_numbers = true)]
    er: Option<f64>,
    /// Width Gamma (> 0).
    #[arg(long)]
    gamma: Option<f64>,
    /// Chain order r (>= 1).
    #[arg(long)]
    order: Option<usize>,
    /// Chain index k of the initial basis state (0 <= k < r).
    #[arg(long)]
    k: Option<usize>,
    /// Last grid time (>= 0).
    #[arg(long = "t-max", allow_negative_numbers = true)]
    t_max: Option<f64>,
    /// Number of grid samples.
    #[arg(long)]
    steps: Option<usize>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file supplying the same keys as the flags; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct DensityArgs {
    /// Resonance energy E_R.
    #[arg(long, allow_negative_numbers = true)]
    er: Option<f64>,
    /// Width Gamma (> 0).
    #[arg(long)]
    gamma: Option<f64>,
    /// Chain order r (>= 1).
    #[arg(long)]
    order: Option<usize>,
    /// Density degree n (0 <= n < r).
    #[arg(long)]
    n: Option<usize>,
    /// Last grid time (>= 0).
    #[arg(long = "t-max", allow_negative_numbers = true)]
    t_max: Option<f64>,
    /// Number of grid samples.
    #[arg(long)]
    steps: Option<usize>,
    /// Deviation tolerance for the exponential verdict.
    #[arg(long)]
    tol: Option<f64>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file supplying the same keys as the flags; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct UniquenessArgs {
    /// Chain order r (>= 1).
    #[arg(long)]
    order: Option<usize>,
    /// Relative singular-value threshold for the null space.
    #[arg(long)]
    tol: Option<f64>,
    /// Resonance energy E_R (defaults to 1; the scan result depends only on
    /// the order).
    #[arg(long, allow_negative_numbers = true)]
    er: Option<f64>,
    /// Width Gamma (defaults to 1).
    #[arg(long)]
    gamma: Option<f64>,
    /// Output JSON path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file supplying the same keys as the flags; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct LineshapeArgs {
    /// Resonance energy E_R.
    #[arg(long, allow_negative_numbers = true)]
    er: Option<f64>,
    /// Width Gamma (> 0).
    #[arg(long)]
    gamma: Option<f64>,
    /// Comma-separated derivative weights w0,w1,...
    #[arg(long)]
    weights: Option<String>,
    /// Lower energy bound.
    #[arg(long = "e-min", allow_negative_numbers = true)]
    e_min: Option<f64>,
    /// Upper energy bound.
    #[arg(long = "e-max", allow_negative_numbers = true)]
    e_max: Option<f64>,
    /// Number of energy samples.
    #[arg(long)]
    points: Option<usize>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file supplying the same keys as the flags; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Input CSV with columns E, intensity.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Init JSON with the starting pole position {"z": {"re": .., "im": ..}}.
    #[arg(long)]
    init: Option<PathBuf>,
    /// Largest candidate pole order.
    #[arg(long = "max-order")]
    max_order: Option<usize>,
    /// Residual-plateau threshold in (0, 1).
    #[arg(long)]
    threshold: Option<f64>,
    /// Output JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file supplying the same keys as the flags; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Process failure with its exit code.
pub enum CliError {
    /// Bad flags, config, input files, or domain preconditions.
    Usage(String),
    /// Output could not be written.
    Io(String),
    /// The numerics failed (no convergence, singular systems).
    Numeric(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<GamowError> for CliError {
    fn from(e: GamowError) -> Self {
        match &e {
            GamowError::NonConvergence { .. }
            | GamowError::IllConditioned(_)
            | GamowError::AllFitsFailed
            | GamowError::NonFinite(_) => CliError::Numeric(e.to_string()),
            GamowError::ArrowOfTimeViolation { t } => {
                CliError::Usage(format!("evolution requires t >= 0, got t = {t}"))
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Evolve(args) => commands::evolve(args),
        Command::Density(args) => commands::density(args),
        Command::Uniqueness(args) => commands::uniqueness(args),
        Command::Lineshape(args) => commands::lineshape(args),
        Command::Fit(args) => commands::fit(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
