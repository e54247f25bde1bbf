//! Steady two-dimensional incompressible flow on star-shaped annular domains.
//!
//! The domain is the region between a positive 2π-periodic boundary curve
//! r(θ) and its double 2r(θ). A radial coordinate t = r/r(θ) maps it onto
//! the strip [1,2] × [0,2π), which is discretized into N radial "lines"
//! (constant t) carrying M periodic θ samples each.
//!
//! The crate provides four layers on top of that mesh:
//!
//! * [`geometry`] / [`operators`] — the transform coefficients and the
//!   discrete calculus (periodic θ stencils, transformed first-derivative
//!   forms, full-grid residual operators).
//! * [`solver`] — per-line contraction maps and a Gauss-Seidel sweep driver
//!   that relaxes all interior lines to a coupled fixed point, with either a
//!   pressure-Poisson or an artificial-compressibility closure.
//! * [`ansatz`] — least-squares fit of per-line coefficient expansions in the
//!   boundary data, minimizing the momentum/continuity residual functional J.
//! * [`potential`] — a rectangle-domain verifier for the potential
//!   construction (w0, w1, w2) that generates divergence-free velocity with
//!   curl-free convection and a path-recoverable pressure.
//!
//! [`config`] and [`io`] supply the flat key-value run configuration and the
//! CSV/report export used by the `annuline` command-line binary.

pub mod ansatz;
pub mod boundary;
pub mod config;
pub mod error;
pub mod geometry;
pub mod io;
pub mod operators;
pub mod potential;
pub mod residual;
pub mod solver;

pub use ansatz::{
    assemble_basis, evaluate_ansatz, fit, AnsatzCoefficients, BasisEvaluation, FitOptions,
    FitOutcome, StartPoint,
};
pub use boundary::BoundaryData;
pub use config::{parse_config, BoundarySource, RunConfig};
pub use error::Error;
pub use io::{run_fit, run_report, run_solve, run_verify_theorem, DirLock};
pub use geometry::{build_coefficients, BoundaryShape, DomainGrid, GeometryCoefficients};
pub use operators::{FlowState, ResidualMode};
pub use potential::{
    certify, convective_curl, divergence, momentum_residual, recover_pressure, solve_potentials,
    velocity_from_potentials, AnalyticField2, CertificationReport, PotentialTriple, RectGrid,
};
pub use residual::{evaluate_j, residual_fields, Quadrature, ResidualReport, Scaling};
pub use solver::{
    banach_line_solve, banach_line_trace, solve, Coupling, InitStrategy, LineTriple,
    PressureClosure, SolveReport, SolverConfig,
};
