//! Nonlinear membrane model of corneal topography.
//!
//! The radial deflection `h(r)` of a pressurised membrane on the unit disk
//! solves `-(1/r)(r h')' + a h = b / sqrt(1 + h'^2)` with `h'(0) = 0` and
//! `h(1) = 0`. This crate evaluates the Bessel-function Green's kernels of
//! that problem, solves it by Picard iteration, checks the existence and
//! envelope bounds, and fits the closed-form linear solution to elevation
//! meshes.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod fit;
pub mod kernel;
pub mod solver;
pub mod special;

pub use data::{generate_synthetic, read_mesh, write_mesh, SurfaceMesh, SynthSpec};
pub use error::{Error, Result};
pub use fit::{
    axial_distance_map, calibrate_a, calibrate_b, elliptical_radius, estimate_ellipse, fit_mesh, ApexMeasurements,
    AxialMap, DomainEllipse, FitOptions, FitResult, SurfaceSource,
};
pub use kernel::{admissibility, theorem1_b_max, lemma_b_max, AdmissibilityReport, DimensionalParams, ModelParams};
pub use solver::{solve, RadialGrid, RadialProfile, SolveOptions, SolveReport};
pub use special::{bessel_i, bessel_k, BesselOrder};
