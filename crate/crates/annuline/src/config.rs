//! Flat key-value run configuration for the command-line binary.
//!
//! The format is one `key = value` per line; `#` starts a comment; blank
//! lines are ignored. Unknown and duplicated keys are rejected so a typo
//! cannot silently fall back to a default.

use std::collections::BTreeSet;
use std::path::PathBuf;

use crate::ansatz::FitOptions;
use crate::error::Error;
use crate::geometry::{BoundaryShape, DomainGrid};
use crate::solver::{InitStrategy, PressureClosure, SolverConfig};

/// Where the boundary samples come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundarySource {
    /// One of the built-in data sets: "example1", "example2", "zero".
    Preset(String),
    /// CSV file with M rows of `u0,v0` or `u0,v0,p0,pf`.
    File(PathBuf),
}

/// Fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n: usize,
    pub m: usize,
    pub nu: f64,
    pub mode: PressureClosure,
    pub shape: BoundaryShape,
    pub boundary: Option<BoundarySource>,
    pub out: Option<PathBuf>,
    pub fit_target: f64,
    pub fit_max_iterations: usize,
    pub inner_tol: f64,
    pub outer_tol: f64,
    pub max_inner: usize,
    pub max_sweeps: usize,
    pub init: InitStrategy,
    pub relaxation: Option<f64>,
    /// Nodes per axis for the rectangle certification run.
    pub theorem_n: usize,
}

impl RunConfig {
    pub fn grid(&self) -> Result<DomainGrid, Error> {
        DomainGrid::new(self.n, self.m)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut sc = SolverConfig::new(self.nu, self.mode);
        sc.inner_tol = self.inner_tol;
        sc.outer_tol = self.outer_tol;
        sc.max_inner = self.max_inner;
        sc.max_sweeps = self.max_sweeps;
        sc.init = self.init;
        sc.relaxation = self.relaxation;
        sc
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            target: self.fit_target,
            max_nlls: self.fit_max_iterations,
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::ParseError {
        line,
        message: message.into(),
    }
}

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::ValidationError {
        field: field.into(),
        message: message.into(),
    }
}

fn parse_f64(field: &str, value: &str) -> Result<f64, Error> {
    value
        .parse::<f64>()
        .map_err(|_| invalid(field, format!("'{value}' is not a number")))
}

fn parse_usize(field: &str, value: &str) -> Result<usize, Error> {
    value
        .parse::<usize>()
        .map_err(|_| invalid(field, format!("'{value}' is not a non-negative integer")))
}

fn parse_real_list(field: &str, value: &str) -> Result<Vec<f64>, Error> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|piece| parse_f64(field, piece.trim()))
        .collect()
}

/// Parses and validates the key-value document.
pub fn parse_config(text: &str) -> Result<RunConfig, Error> {
    let mut n = None;
    let mut m = None;
    let mut nu = None;
    let mut mode_name: Option<String> = None;
    let mut epsilon: Option<f64> = None;
    let mut shape_cos: Option<Vec<f64>> = None;
    let mut shape_sin: Option<Vec<f64>> = None;
    let mut boundary: Option<BoundarySource> = None;
    let mut out: Option<PathBuf> = None;
    let mut fit_target = 1e-10;
    let mut fit_max_iterations = 200;
    let mut inner_tol = 1e-12;
    let mut outer_tol = 1e-10;
    let mut max_inner = 200;
    let mut max_sweeps = 10_000;
    let mut init = InitStrategy::LinearInterpolation;
    let mut relaxation = None;
    let mut theorem_n = 128;

    let mut seen = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(parse_err(line_no, format!("expected 'key = value', got '{line}'")));
        };
        let key = key.trim();
        let value = value.trim();
        if value.is_empty() && key != "shape_sin" && key != "shape_cos" {
            return Err(parse_err(line_no, format!("key '{key}' has no value")));
        }
        if !seen.insert(key.to_string()) {
            return Err(parse_err(line_no, format!("duplicate key '{key}'")));
        }
        match key {
            "n" => n = Some(parse_usize("n", value)?),
            "m" => m = Some(parse_usize("m", value)?),
            "nu" => nu = Some(parse_f64("nu", value)?),
            "mode" => mode_name = Some(value.to_string()),
            "epsilon" => epsilon = Some(parse_f64("epsilon", value)?),
            "shape_cos" => shape_cos = Some(parse_real_list("shape_cos", value)?),
            "shape_sin" => shape_sin = Some(parse_real_list("shape_sin", value)?),
            "boundary" => {
                boundary = Some(match value {
                    "example1" | "example2" | "zero" => BoundarySource::Preset(value.into()),
                    path => BoundarySource::File(PathBuf::from(path)),
                })
            }
            "out" => out = Some(PathBuf::from(value)),
            "fit_target" => fit_target = parse_f64("fit_target", value)?,
            "fit_max_iterations" => {
                fit_max_iterations = parse_usize("fit_max_iterations", value)?
            }
            "inner_tol" => inner_tol = parse_f64("inner_tol", value)?,
            "outer_tol" => outer_tol = parse_f64("outer_tol", value)?,
            "max_inner" => max_inner = parse_usize("max_inner", value)?,
            "max_sweeps" => max_sweeps = parse_usize("max_sweeps", value)?,
            "init" => {
                init = match value {
                    "linear" => InitStrategy::LinearInterpolation,
                    "outer_neighbor" => InitStrategy::OuterNeighbor,
                    other => {
                        return Err(invalid(
                            "init",
                            format!("'{other}' is not one of: linear, outer_neighbor"),
                        ))
                    }
                }
            }
            "relaxation" => relaxation = Some(parse_f64("relaxation", value)?),
            "theorem_n" => theorem_n = parse_usize("theorem_n", value)?,
            other => return Err(parse_err(line_no, format!("unknown key '{other}'"))),
        }
    }

    let n = n.ok_or_else(|| invalid("n", "required"))?;
    let m = m.ok_or_else(|| invalid("m", "required"))?;
    let nu = nu.ok_or_else(|| invalid("nu", "required"))?;
    if n < 2 {
        return Err(invalid("n", format!("need at least 2 radial lines, got {n}")));
    }
    if m < 8 {
        return Err(invalid("m", format!("need at least 8 angular nodes, got {m}")));
    }

    let mode = match mode_name.as_deref() {
        None | Some("artificial_compressibility") => {
            PressureClosure::ArtificialCompressibility(epsilon.unwrap_or(1e-3))
        }
        Some("pressure_poisson") => {
            if epsilon.is_some() {
                return Err(invalid(
                    "epsilon",
                    "only meaningful in artificial_compressibility mode",
                ));
            }
            PressureClosure::PressurePoisson
        }
        Some(other) => {
            return Err(invalid(
                "mode",
                format!("'{other}' is not one of: pressure_poisson, artificial_compressibility"),
            ))
        }
    };

    let shape = BoundaryShape::new(
        shape_cos.unwrap_or_else(|| vec![1.0]),
        shape_sin.unwrap_or_default(),
    )?;

    let config = RunConfig {
        n,
        m,
        nu,
        mode,
        shape,
        boundary,
        out,
        fit_target,
        fit_max_iterations,
        inner_tol,
        outer_tol,
        max_inner,
        max_sweeps,
        init,
        relaxation,
        theorem_n,
    };
    // Reuse the solver-side validation for the numeric knobs, and check the
    // grid bounds and fit/theorem settings here.
    config.grid()?;
    config.solver_config().validate()?;
    if !(config.fit_target > 0.0) {
        return Err(invalid("fit_target", "must be positive"));
    }
    if config.fit_max_iterations == 0 {
        return Err(invalid("fit_max_iterations", "must be at least 1"));
    }
    if config.theorem_n < 16 {
        return Err(invalid("theorem_n", "must be at least 16"));
    }
    Ok(config)
}
