//! Per-line fixed-point maps and the global line-relaxation driver.
//!
//! Each interior line t_n carries three θ-profiles (u, v, P). Discretizing
//! the momentum equations with a central second t-difference isolates
//! −2·(row n); moving everything else to the right and dividing by 3 yields
//! a map whose fixed point is exactly a zero of the discrete equation and
//! whose Lipschitz constant is ≈ (1 + O(d))/3. [`banach_line_solve`] iterates
//! that map on one line; [`solve`] sweeps the lines in order until the whole
//! state is stationary.

use ndarray::{Array1, Array2, ArrayView1};

use crate::boundary::BoundaryData;
use crate::error::Error;
use crate::geometry::{DomainGrid, GeometryCoefficients};
use crate::operators::{hat_d1, hat_d2, theta_derivative, wrap4, DerivOrder, FlowState};
use crate::residual::{evaluate_j, Quadrature, Scaling};

/// How the third equation closes the system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PressureClosure {
    /// Pressure-Poisson equation; requires pressure traces on both curves.
    PressurePoisson,
    /// ε-regularized continuity ε·L(P) + d̂₁u + d̂₂v = 0; missing pressure
    /// traces default to zero.
    ArtificialCompressibility(f64),
}

/// Which terms the per-line maps carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// Full momentum balance: diffusion, convection, pressure gradient.
    Full,
    /// Diffusion only — each field solves L(field) = 0 independently. Used
    /// to expose the linear coefficient ladder of the pure line recursion.
    DiffusionOnly,
}

/// How interior rows are seeded before the first sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitStrategy {
    /// Linear interpolation in t between the two boundary rows.
    LinearInterpolation,
    /// Copy the outer boundary row into every interior row.
    OuterNeighbor,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub nu: f64,
    pub mode: PressureClosure,
    /// Per-line fixed-point stop (sup-norm change).
    pub inner_tol: f64,
    /// Global sweep stop (sup-norm change over the whole sweep).
    pub outer_tol: f64,
    pub max_inner: usize,
    pub max_sweeps: usize,
    pub init: InitStrategy,
    pub coupling: Coupling,
    /// Inner-iteration damping. `None` picks a per-line factor automatically
    /// from the worst θ-mode amplification of the line map (1 on meshes where
    /// the plain iteration already contracts); `Some(w)` forces a fixed
    /// factor in (0, 1] for every line.
    pub relaxation: Option<f64>,
}

impl SolverConfig {
    pub fn new(nu: f64, mode: PressureClosure) -> Self {
        Self {
            nu,
            mode,
            inner_tol: 1e-12,
            outer_tol: 1e-10,
            max_inner: 200,
            max_sweeps: 10_000,
            init: InitStrategy::LinearInterpolation,
            coupling: Coupling::Full,
            relaxation: None,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let check = |ok: bool, field: &str, message: &str| -> Result<(), Error> {
            if ok {
                Ok(())
            } else {
                Err(Error::ValidationError {
                    field: field.into(),
                    message: message.into(),
                })
            }
        };
        check(self.nu > 0.0 && self.nu.is_finite(), "nu", "must be positive")?;
        if let PressureClosure::ArtificialCompressibility(eps) = self.mode {
            check(eps > 0.0 && eps.is_finite(), "epsilon", "must be positive")?;
        }
        check(self.inner_tol > 0.0, "inner_tol", "must be positive")?;
        check(self.outer_tol > 0.0, "outer_tol", "must be positive")?;
        check(self.max_inner > 0, "max_inner", "must be at least 1")?;
        check(self.max_sweeps > 0, "max_sweeps", "must be at least 1")?;
        if let Some(w) = self.relaxation {
            check(
                w.is_finite() && w > 0.0 && w <= 1.0,
                "relaxation",
                "must lie in (0, 1]",
            )?;
        }
        Ok(())
    }
}

/// Damping factor for the inner iteration on line `n`.
///
/// The stiffest θ-mode of the second-derivative stencil has symbol
/// −16/(3h²); through the map's /3 its amplification on line n is
/// (1 − s)/3 with s = (16/3)·max(f₄)·(d/h)²/t_n². When s is large the
/// plain iteration ping-pongs divergently, so damp to put that mode at
/// −0.8; the factor is capped at 1 so well-conditioned meshes iterate
/// undamped. Damping never moves fixed points.
fn relaxation_factor(
    n: usize,
    config: &SolverConfig,
    geo: &GeometryCoefficients,
    grid: &DomainGrid,
) -> f64 {
    if let Some(w) = config.relaxation {
        return w;
    }
    let ratio = grid.d / grid.h_theta();
    let f4_max = geo.f4.iter().copied().fold(0.0_f64, f64::max);
    let t_n = grid.t[n];
    let s = (16.0 / 3.0) * f4_max * ratio * ratio / (t_n * t_n);
    let worst = (1.0 - s) / 3.0;
    (1.8 / (1.0 - worst)).min(1.0)
}

/// Summary of a [`solve`] run.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub sweeps: usize,
    pub inner_iterations_total: usize,
    pub final_change: f64,
    /// Largest ratio of consecutive inner-iteration changes observed during
    /// the final sweep — an empirical Lipschitz constant of the line maps.
    pub contraction_ratio_estimate: f64,
    pub j_final: f64,
}

/// The three θ-profiles of one line.
#[derive(Debug, Clone)]
pub struct LineTriple {
    pub u: Array1<f64>,
    pub v: Array1<f64>,
    pub p: Array1<f64>,
}

/// Shared diffusion part of all three maps:
/// f_next + f_n + f_prev + (f₂/t_n)(f_n−f_prev)d + (f₃/t_n)∂θ(f_n−f_prev)d
/// + (f₄/t_n²)∂θθ(f_n)d².
fn diffusion_part(
    f_next: ArrayView1<f64>,
    f_n: ArrayView1<f64>,
    f_prev: ArrayView1<f64>,
    n: usize,
    geo: &GeometryCoefficients,
    grid: &DomainGrid,
) -> Array1<f64> {
    let m = grid.n_theta;
    let d = grid.d;
    let t_n = grid.t[n];
    let diff: Array1<f64> = (0..m).map(|j| f_n[j] - f_prev[j]).collect();
    let dth_diff = theta_derivative(diff.view(), DerivOrder::First, grid);
    let dthth = theta_derivative(f_n, DerivOrder::Second, grid);
    let mut out = Array1::zeros(m);
    for j in 0..m {
        out[j] = f_next[j]
            + f_n[j]
            + f_prev[j]
            + geo.f2[j] / t_n * diff[j] * d
            + geo.f3[j] / t_n * dth_diff[j] * d
            + geo.f4[j] / (t_n * t_n) * dthth[j] * d * d;
    }
    out
}

fn map_u_impl(
    u_next: ArrayView1<f64>,
    u_n: ArrayView1<f64>,
    u_prev: ArrayView1<f64>,
    v_n: ArrayView1<f64>,
    p_n: ArrayView1<f64>,
    p_prev: ArrayView1<f64>,
    n: usize,
    geo: &GeometryCoefficients,
    grid: &DomainGrid,
    nu: f64,
    coupling: Coupling,
) -> Array1<f64> {
    let mut out = diffusion_part(u_next, u_n, u_prev, n, geo, grid);
    if coupling == Coupling::Full {
        let d2 = grid.d * grid.d;
        let hd1_u = hat_d1(u_n, u_prev, n, geo, grid);
        let hd2_u = hat_d2(u_n, u_prev, n, geo, grid);
        let hd1_p = hat_d1(p_n, p_prev, n, geo, grid);
        for j in 0..grid.n_theta {
            out[j] -= (u_n[j] * hd1_u[j] + v_n[j] * hd2_u[j] + hd1_p[j]) * d2 / nu;
        }
    }
    out.mapv_into(|x| x / 3.0)
}

fn map_v_impl(
    v_next: ArrayView1<f64>,
    v_n: ArrayView1<f64>,
    v_prev: ArrayView1<f64>,
    u_n: ArrayView1<f64>,
    p_n: ArrayView1<f64>,
    p_prev: ArrayView1<f64>,
    n: usize,
    geo: &GeometryCoefficients,
    grid: &DomainGrid,
    nu: f64,
    coupling: Coupling,
) -> Array1<f64> {
    let mut out = diffusion_part(v_next, v_n, v_prev, n, geo, grid);
    if coupling == Coupling::Full {
        let d2 = grid.d * grid.d;
        let hd1_v = hat_d1(v_n, v_prev, n, geo, grid);
        let hd2_v = hat_d2(v_n, v_prev, n, geo, grid);
        let hd2_p = hat_d2(p_n, p_prev, n, geo, grid);
        for j in 0..grid.n_theta {
            out[j] -= (u_n[j] * hd1_v[j] + v_n[j] * hd2_v[j] + hd2_p[j]) * d2 / nu;
        }
    }
    out.mapv_into(|x| x / 3.0)
}

#[allow(clippy::too_many_arguments)]
fn map_p_impl(
    p_next: ArrayView1<f64>,
    p_n: ArrayView1<f64>,
    p_prev: ArrayView1<f64>,
    u_n: ArrayView1<f64>,
    u_prev: ArrayView1<f64>,
    v_n: ArrayView1<f64>,
    v_prev: ArrayView1<f64>,
    n: usize,
    geo: &GeometryCoefficients,
    grid: &DomainGrid,
    mode: PressureClosure,
    coupling: Coupling,
) -> Array1<f64> {
    let mut out = diffusion_part(p_next, p_n, p_prev, n, geo, grid);
    if coupling == Coupling::Full {
        let d2 = grid.d * grid.d;
        let hd1_u = hat_d1(u_n, u_prev, n, geo, grid);
        let hd2_v = hat_d2(v_n, v_prev, n, geo, grid);
        match mode {
            PressureClosure::PressurePoisson => {
                let hd2_u = hat_d2(u_n, u_prev, n, geo, grid);
                let hd1_v = hat_d1(v_n, v_prev, n, geo, grid);
                for j in 0..grid.n_theta {
                    let source = geo.h3[j]
                        * (hd1_u[j] * hd1_u[j]
                            + hd2_v[j] * hd2_v[j]
                            + 2.0 * hd2_u[j] * hd1_v[j]);
                    out[j] += source * d2;
                }
            }
            PressureClosure::ArtificialCompressibility(eps) => {
                for j in 0..grid.n_theta {
                    out[j] += (hd1_u[j] + hd2_v[j]) * d2 / eps;
                }
            }
        }
    }
    out.mapv_into(|x| x / 3.0)
}

/// The u-component line map (T₁)ₙ.
#[allow(clippy::too_many_arguments)]
pub fn t_map_u(
    u_next: ArrayView1<f64>,
    u_n: ArrayView1<f64>,
    u_prev: ArrayView1<f64>,
    v_n: ArrayView1<f64>,
    p_n: ArrayView1<f64>,
    p_prev: ArrayView1<f64>,
    n: usize,
    geo: &GeometryCoefficients,
    grid: &DomainGrid,
    nu: f64,
) -> Array1<f64> {
    map_u_impl(u_next, u_n, u_prev, v_n, p_n, p_prev, n, geo, grid, nu, Coupling::Full)
}

/// The v-component line map (T₂)ₙ.
#[allow(clippy::too_many_arguments)]
pub fn t_map_v(
    v_next: ArrayView1<f64>,
    v_n: ArrayView1<f64>,
    v_prev: ArrayView1<f64>,
    u_n: ArrayView1<f64>,
    p_n: ArrayView1<f64>,
    p_prev: ArrayView1<f64>,
    n: usize,
    geo: &GeometryCoefficients,
    grid: &DomainGrid,
    nu: f64,
) -> Array1<f64> {
    map_v_impl(v_next, v_n, v_prev, u_n, p_n, p_prev, n, geo, grid, nu, Coupling::Full)
}

/// The pressure line map (T₃)ₙ for the chosen closure.
#[allow(clippy::too_many_arguments)]
pub fn t_map_p(
    p_next: ArrayView1<f64>,
    p_n: ArrayView1<f64>,
    p_prev: ArrayView1<f64>,
    u_n: ArrayView1<f64>,
    u_prev: ArrayView1<f64>,
    v_n: ArrayView1<f64>,
    v_prev: ArrayView1<f64>,
    n: usize,
    geo: &GeometryCoefficients,
    grid: &DomainGrid,
    mode: PressureClosure,
) -> Array1<f64> {
    map_p_impl(
        p_next,
        p_n,
        p_prev,
        u_n,
        u_prev,
        v_n,
        v_prev,
        n,
        geo,
        grid,
        mode,
        Coupling::Full,
    )
}

struct LineOutcome {
    triple: LineTriple,
    iterations: usize,
    last_ratio: Option<f64>,
}

fn line_solve(
    n: usize,
    state: &FlowState,
    geo: &GeometryCoefficients,
    grid: &DomainGrid,
    config: &SolverConfig,
    mut trace: Option<&mut Vec<f64>>,
) -> Result<LineOutcome, Error> {
    let p = state
        .p
        .as_ref()
        .ok_or(Error::IncompleteState("pressure rows missing in line solve".into()))?;
    let m = grid.n_theta;
    let d = grid.d;
    let h = grid.h_theta();
    let t_n = grid.t[n];
    let full = config.coupling == Coupling::Full;

    let row = |a: &ndarray::Array2<f64>, i: usize| -> Vec<f64> { a.row(i).to_vec() };
    let u_next = row(&state.u, n + 1);
    let u_prev = row(&state.u, n - 1);
    let v_next = row(&state.v, n + 1);
    let v_prev = row(&state.v, n - 1);
    let p_next = row(p, n + 1);
    let p_prev = row(p, n - 1);

    // Per-line coefficient tables so the hot loop is pure multiply-add.
    let inv_t = 1.0 / t_n;
    let d2 = d * d;
    let mut c2 = vec![0.0; m]; // (f₂/t_n)·d
    let mut c3 = vec![0.0; m]; // (f₃/t_n)·d
    let mut c4 = vec![0.0; m]; // (f₄/t_n²)·d²
    let mut a5 = vec![0.0; m]; // f₅/d
    let mut a6 = vec![0.0; m]; // f₆/t_n
    let mut a7 = vec![0.0; m]; // f₇/d
    let mut a8 = vec![0.0; m]; // f₈/t_n
    for j in 0..m {
        c2[j] = geo.f2[j] * inv_t * d;
        c3[j] = geo.f3[j] * inv_t * d;
        c4[j] = geo.f4[j] * inv_t * inv_t * d2;
        a5[j] = geo.f5[j] / d;
        a6[j] = geo.f6[j] * inv_t;
        a7[j] = geo.f7[j] / d;
        a8[j] = geo.f8[j] * inv_t;
    }
    let k_nu = d2 / config.nu;
    let k_eps = match config.mode {
        PressureClosure::ArtificialCompressibility(eps) => d2 / eps,
        PressureClosure::PressurePoisson => 0.0,
    };
    let poisson = matches!(config.mode, PressureClosure::PressurePoisson);

    // θ-derivatives of the frozen inner-neighbor rows, computed once.
    let d1c = 1.0 / (12.0 * h);
    let d2c = 1.0 / (12.0 * h * h);
    let d1_of = |f: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|j| {
                let (m2, m1, p1, p2) = wrap4(j, m);
                d1c * (f[m2] - 8.0 * f[m1] + 8.0 * f[p1] - f[p2])
            })
            .collect()
    };
    let du_prev = d1_of(&u_prev);
    let dv_prev = d1_of(&v_prev);
    let dp_prev = d1_of(&p_prev);

    // Seed the iteration with the outer neighbor row.
    let mut cu = u_next.clone();
    let mut cv = v_next.clone();
    let mut cp = p_next.clone();
    let mut nu_buf = vec![0.0; m];
    let mut nv_buf = vec![0.0; m];
    let mut np_buf = vec![0.0; m];
    let mut du = vec![0.0; m];
    let mut dv = vec![0.0; m];
    let mut dp = vec![0.0; m];
    let mut ddu = vec![0.0; m];
    let mut ddv = vec![0.0; m];
    let mut ddp = vec![0.0; m];

    let omega = relaxation_factor(n, config, geo, grid);
    let mut prev_change = f64::INFINITY;
    let mut growth_streak = 0usize;
    let mut last_ratio = None;
    let mut iterations = config.max_inner;
    for k in 1..=config.max_inner {
        for j in 0..m {
            let (m2, m1, p1, p2) = wrap4(j, m);
            du[j] = d1c * (cu[m2] - 8.0 * cu[m1] + 8.0 * cu[p1] - cu[p2]);
            dv[j] = d1c * (cv[m2] - 8.0 * cv[m1] + 8.0 * cv[p1] - cv[p2]);
            dp[j] = d1c * (cp[m2] - 8.0 * cp[m1] + 8.0 * cp[p1] - cp[p2]);
            ddu[j] = d2c * (-cu[m2] + 16.0 * cu[m1] - 30.0 * cu[j] + 16.0 * cu[p1] - cu[p2]);
            ddv[j] = d2c * (-cv[m2] + 16.0 * cv[m1] - 30.0 * cv[j] + 16.0 * cv[p1] - cv[p2]);
            ddp[j] = d2c * (-cp[m2] + 16.0 * cp[m1] - 30.0 * cp[j] + 16.0 * cp[p1] - cp[p2]);
        }
        let mut change = 0.0f64;
        for j in 0..m {
            let ru = cu[j] - u_prev[j];
            let rv = cv[j] - v_prev[j];
            let rp = cp[j] - p_prev[j];
            let mut mu =
                u_next[j] + cu[j] + u_prev[j] + c2[j] * ru + c3[j] * (du[j] - du_prev[j])
                    + c4[j] * ddu[j];
            let mut mv =
                v_next[j] + cv[j] + v_prev[j] + c2[j] * rv + c3[j] * (dv[j] - dv_prev[j])
                    + c4[j] * ddv[j];
            let mut mp =
                p_next[j] + cp[j] + p_prev[j] + c2[j] * rp + c3[j] * (dp[j] - dp_prev[j])
                    + c4[j] * ddp[j];
            if full {
                let hd1u = a5[j] * ru + a6[j] * du[j];
                let hd2u = a7[j] * ru + a8[j] * du[j];
                let hd1v = a5[j] * rv + a6[j] * dv[j];
                let hd2v = a7[j] * rv + a8[j] * dv[j];
                let hd1p = a5[j] * rp + a6[j] * dp[j];
                let hd2p = a7[j] * rp + a8[j] * dp[j];
                mu -= (cu[j] * hd1u + cv[j] * hd2u + hd1p) * k_nu;
                mv -= (cu[j] * hd1v + cv[j] * hd2v + hd2p) * k_nu;
                if poisson {
                    mp += geo.h3[j]
                        * (hd1u * hd1u + hd2v * hd2v + 2.0 * hd2u * hd1v)
                        * d2;
                } else {
                    mp += (hd1u + hd2v) * k_eps;
                }
            }
            let mut new_u = mu / 3.0;
            let mut new_v = mv / 3.0;
            let mut new_p = mp / 3.0;
            if omega < 1.0 {
                new_u = cu[j] + omega * (new_u - cu[j]);
                new_v = cv[j] + omega * (new_v - cv[j]);
                new_p = cp[j] + omega * (new_p - cp[j]);
            }
            change = change
                .max((new_u - cu[j]).abs())
                .max((new_v - cv[j]).abs())
                .max((new_p - cp[j]).abs());
            nu_buf[j] = new_u;
            nv_buf[j] = new_v;
            np_buf[j] = new_p;
        }
        std::mem::swap(&mut cu, &mut nu_buf);
        std::mem::swap(&mut cv, &mut nv_buf);
        std::mem::swap(&mut cp, &mut np_buf);
        if let Some(t) = trace.as_deref_mut() {
            t.push(change);
        }
        if prev_change.is_finite() && prev_change > 0.0 {
            last_ratio = Some(change / prev_change);
        }
        if change > prev_change {
            growth_streak += 1;
            if growth_streak >= 5 {
                return Err(Error::InnerDivergence { line: n, iterations: k });
            }
        } else {
            growth_streak = 0;
        }
        if change <= config.inner_tol {
            iterations = k;
            break;
        }
        prev_change = change;
    }
    Ok(LineOutcome {
        triple: LineTriple {
            u: Array1::from_vec(cu),
            v: Array1::from_vec(cv),
            p: Array1::from_vec(cp),
        },
        iterations,
        last_ratio,
    })
}

/// Iterates the combined line map on row n (neighbor rows frozen) until the
/// sup-change falls below `inner_tol` or `max_inner` is hit. Returns the
/// final triple and the iteration count.
pub fn banach_line_solve(
    n: usize,
    state: &FlowState,
    geo: &GeometryCoefficients,
    grid: &DomainGrid,
    config: &SolverConfig,
) -> Result<(LineTriple, usize), Error> {
    if n == 0 || n >= grid.n_lines {
        return Err(Error::BadDiscretization(format!(
            "line index {n} is not interior (1..={})",
            grid.n_lines - 1
        )));
    }
    let out = line_solve(n, state, geo, grid, config, None)?;
    Ok((out.triple, out.iterations))
}

/// Like [`banach_line_solve`], additionally returning the sequence of
/// sup-norm changes, one per iteration.
pub fn banach_line_trace(
    n: usize,
    state: &FlowState,
    geo: &GeometryCoefficients,
    grid: &DomainGrid,
    config: &SolverConfig,
) -> Result<(LineTriple, Vec<f64>), Error> {
    let mut changes = Vec::new();
    let out = line_solve(n, state, geo, grid, config, Some(&mut changes))?;
    Ok((out.triple, changes))
}

/// Builds the initial state: boundary rows installed, interior rows seeded
/// per the init strategy.
fn initial_state(
    boundary: &BoundaryData,
    grid: &DomainGrid,
    config: &SolverConfig,
) -> Result<FlowState, Error> {
    let m = grid.n_theta;
    let n_lines = grid.n_lines;
    let zeros = Array1::zeros(m);

    let (p0, pf): (Array1<f64>, Array1<f64>) = match config.mode {
        PressureClosure::PressurePoisson => (
            boundary.p0.clone().ok_or(Error::MissingPressureBoundary)?,
            boundary.pf.clone().ok_or(Error::MissingPressureBoundary)?,
        ),
        PressureClosure::ArtificialCompressibility(_) => (
            boundary.p0.clone().unwrap_or_else(|| zeros.clone()),
            boundary.pf.clone().unwrap_or_else(|| zeros.clone()),
        ),
    };

    let mut state = FlowState::zeros(grid);
    let mut p = state.p.take().unwrap();
    let fill =
        |arr: &mut Array2<f64>, inner: &Array1<f64>, outer: &Array1<f64>, init: InitStrategy| {
            for j in 0..m {
                arr[(0, j)] = inner[j];
                arr[(n_lines, j)] = outer[j];
            }
            for n in 1..n_lines {
                let s = n as f64 / n_lines as f64;
                for j in 0..m {
                    arr[(n, j)] = match init {
                        InitStrategy::LinearInterpolation => {
                            (1.0 - s) * inner[j] + s * outer[j]
                        }
                        InitStrategy::OuterNeighbor => outer[j],
                    };
                }
            }
        };
    fill(&mut state.u, &boundary.u0, &zeros, config.init);
    fill(&mut state.v, &boundary.v0, &zeros, config.init);
    fill(&mut p, &p0, &pf, config.init);
    state.p = Some(p);
    Ok(state)
}

/// Ordered line-relaxation: sweeps n = 1..N−1, each line solved to its own
/// fixed point against the newest neighbor rows, until a full sweep no longer
/// changes the state.
pub fn solve(
    boundary: &BoundaryData,
    geo: &GeometryCoefficients,
    grid: &DomainGrid,
    config: &SolverConfig,
) -> Result<(FlowState, SolveReport), Error> {
    config.validate()?;
    if boundary.n_theta() != grid.n_theta {
        return Err(Error::ShapeMismatch(format!(
            "boundary has {} samples, grid wants {}",
            boundary.n_theta(),
            grid.n_theta
        )));
    }
    let mut state = initial_state(boundary, grid, config)?;

    let mut inner_total = 0usize;
    let mut last_change = f64::INFINITY;
    let mut ratio = 0.0f64;
    for sweep in 1..=config.max_sweeps {
        let mut sweep_change = 0.0f64;
        let mut sweep_ratio = 0.0f64;
        for n in 1..grid.n_lines {
            let out = line_solve(n, &state, geo, grid, config, None)?;
            inner_total += out.iterations;
            if let Some(r) = out.last_ratio {
                sweep_ratio = sweep_ratio.max(r);
            }
            let mut p = state.p.take().unwrap();
            for j in 0..grid.n_theta {
                sweep_change = sweep_change
                    .max((out.triple.u[j] - state.u[(n, j)]).abs())
                    .max((out.triple.v[j] - state.v[(n, j)]).abs())
                    .max((out.triple.p[j] - p[(n, j)]).abs());
                state.u[(n, j)] = out.triple.u[j];
                state.v[(n, j)] = out.triple.v[j];
                p[(n, j)] = out.triple.p[j];
            }
            state.p = Some(p);
        }
        last_change = sweep_change;
        ratio = sweep_ratio;
        if sweep_change <= config.outer_tol {
            let j_final = evaluate_j(
                &state,
                geo,
                grid,
                config.nu,
                Quadrature::UnitWeighted,
                Scaling::Transformed,
            )?
            .j;
            return Ok((
                state,
                SolveReport {
                    sweeps: sweep,
                    inner_iterations_total: inner_total,
                    final_change: sweep_change,
                    contraction_ratio_estimate: ratio,
                    j_final,
                },
            ));
        }
    }
    let j_final = evaluate_j(
        &state,
        geo,
        grid,
        config.nu,
        Quadrature::UnitWeighted,
        Scaling::Transformed,
    )
    .map(|r| r.j)
    .unwrap_or(f64::NAN);
    Err(Error::NoConvergence {
        sweeps: config.max_sweeps,
        last_change,
        report: SolveReport {
            sweeps: config.max_sweeps,
            inner_iterations_total: inner_total,
            final_change: last_change,
            contraction_ratio_estimate: ratio,
            j_final,
        },
    })
}
