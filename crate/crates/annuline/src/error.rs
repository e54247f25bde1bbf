//! Crate-wide error type.

use thiserror::Error;

use crate::ansatz::FitOutcome;
use crate::solver::SolveReport;

#[derive(Debug, Error)]
pub enum Error {
    /// The boundary curve dips to zero or below somewhere.
    #[error("boundary radius must stay positive: r({theta:.6}) = {r:.6e}")]
    NonPositiveRadius { theta: f64, r: f64 },

    /// Grid sizes outside the supported range.
    #[error("bad discretization: {0}")]
    BadDiscretization(String),

    /// A residual mode needs pressure rows the state does not carry.
    #[error("state has no pressure rows but residual mode '{mode}' needs them")]
    ModeMismatch { mode: &'static str },

    /// State arrays missing or inconsistent with the grid.
    #[error("incomplete state: {0}")]
    IncompleteState(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Per-line fixed-point iteration moved away from its fixed point.
    #[error("line {line} iteration diverged after {iterations} iterations")]
    InnerDivergence { line: usize, iterations: usize },

    /// Sweep driver hit max_sweeps; the last report is attached.
    #[error("no convergence after {sweeps} sweeps (last change {last_change:.3e})")]
    NoConvergence {
        sweeps: usize,
        last_change: f64,
        report: SolveReport,
    },

    /// Pressure-Poisson runs need both pressure boundary rows.
    #[error("missing pressure boundary rows (required in pressure_poisson mode)")]
    MissingPressureBoundary,

    /// Soft failure: the fit finished without reaching its target J.
    /// The best outcome found is attached and still usable.
    #[error("fit stopped at J = {:.6e} without reaching target {:.6e}", .0.report.j, .0.target)]
    TargetNotReached(Box<FitOutcome>),

    #[error("poisson solve failed: {0}")]
    SolveFailure(String),

    /// Path-integrated field disagrees between integration orders.
    #[error("field is not a gradient: path defect {defect:.3e} exceeds {limit:.3e}")]
    NotAGradient { defect: f64, limit: f64 },

    #[error("config line {line}: {message}")]
    ParseError { line: usize, message: String },

    #[error("config field '{field}': {message}")]
    ValidationError { field: String, message: String },

    #[error("output directory is locked by another run ({0})")]
    OutputLocked(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code convention: 1 numeric failure, 2 configuration error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ParseError { .. }
            | Error::ValidationError { .. }
            | Error::BadDiscretization(_)
            | Error::NonPositiveRadius { .. }
            | Error::OutputLocked(_) => 2,
            _ => 1,
        }
    }
}
