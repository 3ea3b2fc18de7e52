//! `cornea`: solve the radial membrane problem, tabulate admissibility
//! bounds, generate synthetic meshes, fit meshes and map axial distance.
//!
//! Every command prints a `key = value unit` report on stdout. Exit codes:
//! 0 success, 1 input/output or parse failure, 2 numeric-domain failure,
//! 3 degenerate data.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cornea_core::Error;

#[derive(Debug, Parser)]
#[command(name = "cornea", version, about = "Nonlinear membrane model of corneal topography")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for the radial profile by Picard iteration.
    Solve(SolveArgs),
    /// Tabulate the existence and envelope bounds on b over a range of a.
    Bounds(BoundsArgs),
    /// Calibrate (a, b) from apex height and central radius.
    Calibrate(CalibrateArgs),
    /// Generate a synthetic elevation mesh.
    Synth(SynthArgs),
    /// Fit the model to an elevation mesh.
    Fit(FitArgs),
    /// Axial-distance map of a mesh and its error against a fitted model.
    Axial(AxialArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub b: f64,
    #[arg(long, default_value_t = cornea_core::solver::DEFAULT_NODES)]
    pub nodes: usize,
    #[arg(long, default_value_t = cornea_core::solver::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = cornea_core::solver::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    /// Fail instead of warning when b is outside the contraction bound.
    #[arg(long)]
    pub enforce_bound: bool,
    /// Profile table (r, h, h', h0, A h1) as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, default_value_t = 0.25)]
    pub a_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub a_max: f64,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// CSV of (a, theorem1_b_max, lemma_b_max).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Apex height, mm.
    #[arg(long)]
    pub max_deflection: f64,
    /// Central radius of curvature, mm.
    #[arg(long)]
    pub central_radius: f64,
    /// Length scale, mm.
    #[arg(long)]
    pub scale_radius: f64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long)]
    pub b: f64,
    /// mm
    #[arg(long, default_value_t = 5.8)]
    pub scale_radius: f64,
    /// Signed squared eccentricity of the footprint, negative when the y
    /// axis is longer.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub ecc_sq: f64,
    /// Gaussian noise standard deviation, mm.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 123)]
    pub nx: usize,
    #[arg(long, default_value_t = 123)]
    pub ny: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    /// Fit report (`key = value unit` lines).
    #[arg(long)]
    pub out: PathBuf,
    /// Per-point absolute error grid; defaults to `<out>.errors`.
    #[arg(long)]
    pub errors: Option<PathBuf>,
    #[arg(long, default_value_t = cornea_core::fit::DEFAULT_LEVEL_FRACTION)]
    pub level_fraction: f64,
    #[arg(long, default_value_t = cornea_core::fit::DEFAULT_APEX_WINDOW)]
    pub apex_window: f64,
}

#[derive(Debug, Args)]
pub struct AxialArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    /// Report written by `fit`.
    #[arg(long)]
    pub fit: PathBuf,
    /// Axial distance of the mesh, mm, in mesh format.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-point absolute axial error grid; defaults to `<out>.errors`.
    #[arg(long)]
    pub errors: Option<PathBuf>,
    #[arg(long, default_value_t = cornea_core::fit::DEFAULT_GRADIENT_FLOOR)]
    pub gradient_floor: f64,
    /// Excluded disk around the apex, as a fraction of the scale radius.
    #[arg(long, default_value_t = cornea_core::fit::DEFAULT_APEX_EXCLUSION)]
    pub apex_exclusion: f64,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Domain { .. })
        | Some(Error::Numerical { .. })
        | Some(Error::BoundViolation { .. })
        | Some(Error::HypothesisViolation { .. })
        | Some(Error::NoRoot { .. })
        | Some(Error::NoConvergence { .. }) => 2,
        Some(Error::ApexNotFound(_)) | Some(Error::DegenerateLevelSet(_)) => 3,
        _ => 1,
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
    let result = match cli.command {
        Command::Solve(args) => commands::solve(&args),
        Command::Bounds(args) => commands::bounds(&args),
        Command::Calibrate(args) => commands::calibrate(&args),
        Command::Synth(args) => commands::synth(&args),
        Command::Fit(args) => commands::fit(&args),
        Command::Axial(args) => commands::axial(&args),
    };
    match result {
        Ok(report) => {
            print!("{report}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
