//! Run orchestration: locks the output directory, executes a command, and
//! writes plot-ready CSV files plus a plain-text report.
//!
//! All numbers are written with 17 significant decimal digits, which
//! round-trips every finite `f64` exactly; reports contain no timestamps,
//! so identical runs produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2, ArrayView1};

use crate::ansatz::{fit, FitOutcome, P_LABELS, U_LABELS, V_LABELS};
use crate::boundary::BoundaryData;
use crate::config::{BoundarySource, RunConfig};
use crate::error::Error;
use crate::geometry::{build_coefficients, DomainGrid, GeometryCoefficients};
use crate::operators::FlowState;
use crate::potential::{certify, CertificationReport};
use crate::residual::{evaluate_j, Quadrature, ResidualReport, Scaling};
use crate::solver::{solve, PressureClosure, SolveReport};

/// Interior lines exported for figure comparison (those that exist for the
/// configured N; the full field is written regardless).
pub const FIGURE_LINES: [usize; 5] = [1, 5, 10, 15, 19];

/// RAII lock: `<dir>/.lock` exists exactly while a run is in progress, so
/// two processes cannot write the same output directory concurrently.
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self, Error> {
        fs::create_dir_all(dir)?;
        let path = dir.join(".lock");
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(mut file) => {
                let _ = writeln!(file, "{}", std::process::id());
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(Error::OutputLocked(dir.display().to_string()))
            }
            Err(e) => Err(Error::Io(e)),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// Resolves the configured boundary source against a grid.
pub fn load_boundary(config: &RunConfig, grid: &DomainGrid) -> Result<BoundaryData, Error> {
    match &config.boundary {
        None => Err(Error::ValidationError {
            field: "boundary".into(),
            message: "required for this command".into(),
        }),
        Some(BoundarySource::Preset(name)) => {
            BoundaryData::preset(name, grid).ok_or_else(|| Error::ValidationError {
                field: "boundary".into(),
                message: format!("unknown preset '{name}'"),
            })
        }
        Some(BoundarySource::File(path)) => read_boundary_csv(path, grid),
    }
}

/// Reads headerless boundary samples: exactly M rows of `u0,v0` or
/// `u0,v0,p0,pf`.
fn read_boundary_csv(path: &Path, grid: &DomainGrid) -> Result<BoundaryData, Error> {
    let text = fs::read_to_string(path)?;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut rows = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let values = line
            .split(',')
            .map(|piece| {
                piece.trim().parse::<f64>().map_err(|_| Error::ParseError {
                    line: idx + 1,
                    message: format!("'{}' is not a number", piece.trim()),
                })
            })
            .collect::<Result<Vec<f64>, Error>>()?;
        if columns.is_empty() {
            if values.len() != 2 && values.len() != 4 {
                return Err(Error::ParseError {
                    line: idx + 1,
                    message: format!(
                        "expected 2 columns (u0,v0) or 4 (u0,v0,p0,pf), got {}",
                        values.len()
                    ),
                });
            }
            columns = vec![Vec::new(); values.len()];
        } else if values.len() != columns.len() {
            return Err(Error::ParseError {
                line: idx + 1,
                message: format!(
                    "row has {} columns, earlier rows have {}",
                    values.len(),
                    columns.len()
                ),
            });
        }
        for (col, value) in columns.iter_mut().zip(values) {
            col.push(value);
        }
        rows += 1;
    }
    if rows != grid.n_theta {
        return Err(Error::ValidationError {
            field: "boundary".into(),
            message: format!(
                "file '{}' has {rows} rows, grid wants {}",
                path.display(),
                grid.n_theta
            ),
        });
    }
    let mut columns = columns.into_iter();
    let u0 = Array1::from_vec(columns.next().unwrap());
    let v0 = Array1::from_vec(columns.next().unwrap());
    let data = BoundaryData::from_samples(u0, v0, grid)?;
    match (columns.next(), columns.next()) {
        (Some(p0), Some(pf)) => data.with_pressure(Array1::from_vec(p0), Array1::from_vec(pf)),
        _ => Ok(data),
    }
}

fn write_column_csv(path: &Path, theta: &[f64], values: ArrayView1<f64>) -> Result<(), Error> {
    let mut text = String::from("theta,value\n");
    for (th, v) in theta.iter().zip(values.iter()) {
        let _ = writeln!(text, "{th:.16e},{v:.16e}");
    }
    fs::write(path, text)?;
    Ok(())
}

fn read_column_csv(path: &Path, n_theta: usize) -> Result<Array1<f64>, Error> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "theta,value" => {}
        _ => {
            return Err(Error::ParseError {
                line: 1,
                message: format!("'{}' must start with 'theta,value'", path.display()),
            })
        }
    }
    let mut values = Vec::with_capacity(n_theta);
    for (idx, raw) in lines {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let Some((_, value)) = line.split_once(',') else {
            return Err(Error::ParseError {
                line: idx + 1,
                message: format!("expected 'theta,value' row in '{}'", path.display()),
            });
        };
        let value = value.trim().parse::<f64>().map_err(|_| Error::ParseError {
            line: idx + 1,
            message: format!("'{}' is not a number", value.trim()),
        })?;
        values.push(value);
    }
    if values.len() != n_theta {
        return Err(Error::ValidationError {
            field: "fields".into(),
            message: format!(
                "'{}' has {} rows, grid wants {n_theta}",
                path.display(),
                values.len()
            ),
        });
    }
    Ok(Array1::from_vec(values))
}

/// Writes `u_<n>.csv`, `v_<n>.csv`, `P_<n>.csv` for every line 0..=N.
fn write_state(state: &FlowState, grid: &DomainGrid, dir: &Path) -> Result<(), Error> {
    for n in 0..=grid.n_lines {
        write_column_csv(&dir.join(format!("u_{n}.csv")), &grid.theta, state.u.row(n))?;
        write_column_csv(&dir.join(format!("v_{n}.csv")), &grid.theta, state.v.row(n))?;
        if let Some(p) = &state.p {
            write_column_csv(&dir.join(format!("P_{n}.csv")), &grid.theta, p.row(n))?;
        }
    }
    Ok(())
}

fn read_state(grid: &DomainGrid, dir: &Path) -> Result<FlowState, Error> {
    let rows = grid.n_lines + 1;
    let mut u = Array2::zeros((rows, grid.n_theta));
    let mut v = Array2::zeros((rows, grid.n_theta));
    let mut p = Array2::zeros((rows, grid.n_theta));
    for n in 0..rows {
        u.row_mut(n)
            .assign(&read_column_csv(&dir.join(format!("u_{n}.csv")), grid.n_theta)?);
        v.row_mut(n)
            .assign(&read_column_csv(&dir.join(format!("v_{n}.csv")), grid.n_theta)?);
        p.row_mut(n)
            .assign(&read_column_csv(&dir.join(format!("P_{n}.csv")), grid.n_theta)?);
    }
    Ok(FlowState { u, v, p: Some(p) })
}

fn write_coefficient_csv(
    path: &Path,
    labels: &[&str],
    table: &Array2<f64>,
) -> Result<(), Error> {
    let mut text = String::from("line");
    for label in labels {
        let _ = write!(text, ",{label}");
    }
    text.push('\n');
    for (row, coeffs) in table.rows().into_iter().enumerate() {
        let _ = write!(text, "{}", row + 1);
        for v in coeffs.iter() {
            let _ = write!(text, ",{v:.16e}");
        }
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

fn real_list(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn config_echo(out: &mut String, command: &str, config: &RunConfig) {
    let _ = writeln!(out, "command = {command}");
    if let Some(boundary) = &config.boundary {
        match boundary {
            BoundarySource::Preset(name) => {
                let _ = writeln!(out, "boundary = {name}");
            }
            BoundarySource::File(path) => {
                let _ = writeln!(out, "boundary = {}", path.display());
            }
        }
    }
    let _ = writeln!(out, "n = {}", config.n);
    let _ = writeln!(out, "m = {}", config.m);
    let _ = writeln!(out, "nu = {:.16e}", config.nu);
    match config.mode {
        PressureClosure::PressurePoisson => {
            let _ = writeln!(out, "mode = pressure_poisson");
        }
        PressureClosure::ArtificialCompressibility(eps) => {
            let _ = writeln!(out, "mode = artificial_compressibility");
            let _ = writeln!(out, "epsilon = {eps:.16e}");
        }
    }
    let _ = writeln!(out, "shape_cos = {}", real_list(config.shape.fourier_cosine()));
    let _ = writeln!(out, "shape_sin = {}", real_list(config.shape.fourier_sine()));
}

fn residual_block(out: &mut String, report: &ResidualReport) {
    let _ = writeln!(out, "j = {:.16e}", report.j);
    let _ = writeln!(out, "momentum_u_norm2 = {:.16e}", report.momentum_u_norm2);
    let _ = writeln!(out, "momentum_v_norm2 = {:.16e}", report.momentum_v_norm2);
    let _ = writeln!(out, "continuity_norm2 = {:.16e}", report.continuity_norm2);
    let _ = writeln!(out, "quadrature = {}", report.quadrature.name());
    let _ = writeln!(out, "scaling = {}", report.scaling.name());
}

fn figure_lines_block(out: &mut String, n_lines: usize) {
    let kept: Vec<String> = FIGURE_LINES
        .iter()
        .filter(|&&line| line < n_lines)
        .map(|line| line.to_string())
        .collect();
    let _ = writeln!(out, "figure_lines = {}", kept.join(","));
}

/// Evaluates J with the conventions fixed for reports: unit node weights on
/// the transformed-equation residuals.
fn report_j(
    state: &FlowState,
    geo: &GeometryCoefficients,
    grid: &DomainGrid,
    nu: f64,
) -> Result<ResidualReport, Error> {
    evaluate_j(state, geo, grid, nu, Quadrature::UnitWeighted, Scaling::Transformed)
}

/// Runs the relaxation solver and exports fields plus `report.txt`.
pub fn run_solve(
    config: &RunConfig,
    out_dir: &Path,
) -> Result<(SolveReport, ResidualReport), Error> {
    let lock = DirLock::acquire(out_dir)?;
    let grid = config.grid()?;
    let geo = build_coefficients(&config.shape, &grid)?;
    let boundary = load_boundary(config, &grid)?;
    let (state, solve_report) = solve(&boundary, &geo, &grid, &config.solver_config())?;
    let residual_report = report_j(&state, &geo, &grid, config.nu)?;

    write_state(&state, &grid, out_dir)?;
    let mut text = String::new();
    config_echo(&mut text, "solve", config);
    let _ = writeln!(text, "sweeps = {}", solve_report.sweeps);
    let _ = writeln!(
        text,
        "inner_iterations_total = {}",
        solve_report.inner_iterations_total
    );
    let _ = writeln!(text, "final_change = {:.16e}", solve_report.final_change);
    let _ = writeln!(
        text,
        "contraction_ratio_estimate = {:.16e}",
        solve_report.contraction_ratio_estimate
    );
    let _ = writeln!(text, "j_final = {:.16e}", solve_report.j_final);
    residual_block(&mut text, &residual_report);
    figure_lines_block(&mut text, grid.n_lines);
    fs::write(out_dir.join("report.txt"), text)?;
    drop(lock);
    Ok((solve_report, residual_report))
}

/// Runs the least-squares fit and exports fields, coefficient tables, the
/// free pressure trace, and `report.txt`. When the fit stops short of its
/// target the best state found is still written before the error returns.
pub fn run_fit(config: &RunConfig, out_dir: &Path) -> Result<FitOutcome, Error> {
    let lock = DirLock::acquire(out_dir)?;
    let grid = config.grid()?;
    let geo = build_coefficients(&config.shape, &grid)?;
    let boundary = load_boundary(config, &grid)?;
    let fit_result = fit(&boundary, &geo, &grid, config.nu, &config.fit_options());
    let (outcome, missed_target) = match fit_result {
        Ok(outcome) => (outcome, false),
        Err(Error::TargetNotReached(outcome)) => (*outcome, true),
        Err(e) => return Err(e),
    };

    write_state(&outcome.state, &grid, out_dir)?;
    write_coefficient_csv(&out_dir.join("coeff_a.csv"), &U_LABELS, &outcome.coefficients.a)?;
    write_coefficient_csv(&out_dir.join("coeff_b.csv"), &V_LABELS, &outcome.coefficients.b)?;
    write_coefficient_csv(&out_dir.join("coeff_c.csv"), &P_LABELS, &outcome.coefficients.c)?;
    write_column_csv(&out_dir.join("P0.csv"), &grid.theta, outcome.p0.view())?;

    let mut text = String::new();
    config_echo(&mut text, "fit", config);
    let _ = writeln!(text, "fit_target = {:.16e}", outcome.target);
    let _ = writeln!(text, "fit_iterations = {}", outcome.iterations);
    let _ = writeln!(text, "fit_start = {}", outcome.start_used.name());
    let _ = writeln!(
        text,
        "fit_target_reached = {}",
        if missed_target { "no" } else { "yes" }
    );
    residual_block(&mut text, &outcome.report);
    figure_lines_block(&mut text, grid.n_lines);
    fs::write(out_dir.join("report.txt"), text)?;
    drop(lock);

    if missed_target {
        Err(Error::TargetNotReached(Box::new(outcome)))
    } else {
        Ok(outcome)
    }
}

/// Runs the rectangle certification and writes its key-value report.
pub fn run_verify_theorem(
    config: &RunConfig,
    out_dir: &Path,
) -> Result<CertificationReport, Error> {
    let lock = DirLock::acquire(out_dir)?;
    let report = certify(config.theorem_n)?;
    let mut text = String::new();
    let _ = writeln!(text, "command = verify-theorem");
    text.push_str(&report.to_text());
    fs::write(out_dir.join("report.txt"), text)?;
    drop(lock);
    Ok(report)
}

/// Re-reads previously exported fields and re-evaluates J from file data
/// alone, writing `report_recheck.txt` next to the original report.
pub fn run_report(config: &RunConfig, out_dir: &Path) -> Result<ResidualReport, Error> {
    let lock = DirLock::acquire(out_dir)?;
    let grid = config.grid()?;
    let geo = build_coefficients(&config.shape, &grid)?;
    let state = read_state(&grid, out_dir)?;
    let report = report_j(&state, &geo, &grid, config.nu)?;
    let mut text = String::new();
    config_echo(&mut text, "report", config);
    residual_block(&mut text, &report);
    fs::write(out_dir.join("report_recheck.txt"), text)?;
    drop(lock);
    Ok(report)
}
