use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "dhym", version, about = "Checks and solvers for the deformed Hermitian-Yang-Mills equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Input document (JSON).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Directory for emitted files; nothing is written without it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance override (meaning depends on the subcommand).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Format of the report printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Angle, radius, symmetric functions and margins of one spectrum or pencil.
    Point(PointArgs),
    /// Charge path, lifted angle and obstruction verdicts for topological data.
    Charge,
    /// Heat flow on a flat torus.
    Flow,
    /// Semi-flat special Lagrangian versus mirror dHYM phase check.
    Syz,
    /// Runs the built-in smoke tests.
    Selftest,
}

#[derive(Debug, Clone, Args)]
pub struct PointArgs {
    /// Comma-separated relative eigenvalues.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    /// Target angle for the margins (defaults to Θ of the spectrum).
    #[arg(long, allow_hyphen_values = true)]
    pub theta_hat: Option<f64>,
}
