//! Discrete calculus on the (t,θ) grid.
//!
//! θ-derivatives use 4th-order central periodic stencils; first t-derivatives
//! use the same backward difference (u_n − u_{n−1})/d as the per-line solver
//! maps, so that a converged solver state evaluates to a near-zero residual
//! here. Second t-derivatives are the standard central difference.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::Error;
use crate::geometry::{DomainGrid, GeometryCoefficients};

/// θ-derivative order selector for [`theta_derivative`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivOrder {
    First,
    Second,
}

/// Closure equation evaluated as the third residual field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResidualMode {
    /// L(P) + h3·(d̂1(u)² + d̂2(v)² + 2 d̂2(u) d̂1(v)) = 0.
    PressurePoisson,
    /// ε·L(P) + d̂1(u) + d̂2(v) = 0.
    ArtificialCompressibility(f64),
    /// Raw continuity d̂1(u) + d̂2(v) = 0.
    Continuity,
}

impl ResidualMode {
    pub fn name(&self) -> &'static str {
        match self {
            ResidualMode::PressurePoisson => "pressure_poisson",
            ResidualMode::ArtificialCompressibility(_) => "artificial_compressibility",
            ResidualMode::Continuity => "continuity",
        }
    }
}

/// Sampled u, v, P on all lines. Row n of each array is the θ-sample on line
/// t_n; rows 0 and N carry the boundary data. States assembled without any
/// pressure information leave `p` unset.
#[derive(Clone)]
pub struct FlowState {
    pub u: Array2<f64>,
    pub v: Array2<f64>,
    pub p: Option<Array2<f64>>,
}

impl FlowState {
    pub fn zeros(grid: &DomainGrid) -> Self {
        let shape = (grid.n_lines + 1, grid.n_theta);
        Self {
            u: Array2::zeros(shape),
            v: Array2::zeros(shape),
            p: Some(Array2::zeros(shape)),
        }
    }

    /// Checks the arrays against the grid; returns the row/column counts.
    pub fn dims_checked(&self, grid: &DomainGrid) -> Result<(usize, usize), Error> {
        let want = (grid.n_lines + 1, grid.n_theta);
        for (name, arr) in [("u", &self.u), ("v", &self.v)] {
            if arr.dim() != want {
                return Err(Error::IncompleteState(format!(
                    "{name} is {:?}, grid wants {want:?}",
                    arr.dim()
                )));
            }
        }
        if let Some(p) = &self.p {
            if p.dim() != want {
                return Err(Error::IncompleteState(format!(
                    "P is {:?}, grid wants {want:?}",
                    p.dim()
                )));
            }
        }
        Ok(want)
    }
}

impl std::fmt::Debug for FlowState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FlowState")
            .field("lines", &self.u.nrows())
            .field("n_theta", &self.u.ncols())
            .field("has_pressure", &self.p.is_some())
            .finish()
    }
}

/// 4th-order central periodic finite difference in θ. Exact for constants.
pub fn theta_derivative(f: ArrayView1<f64>, order: DerivOrder, grid: &DomainGrid) -> Array1<f64> {
    let m = grid.n_theta;
    assert_eq!(f.len(), m, "line sample length must equal n_theta");
    let h = grid.h_theta();
    let mut out = Array1::zeros(m);
    match order {
        DerivOrder::First => {
            let c = 1.0 / (12.0 * h);
            for j in 0..m {
                let (m2, m1, p1, p2) = wrap4(j, m);
                out[j] = c * (f[m2] - 8.0 * f[m1] + 8.0 * f[p1] - f[p2]);
            }
        }
        DerivOrder::Second => {
            let c = 1.0 / (12.0 * h * h);
            for j in 0..m {
                let (m2, m1, p1, p2) = wrap4(j, m);
                out[j] = c * (-f[m2] + 16.0 * f[m1] - 30.0 * f[j] + 16.0 * f[p1] - f[p2]);
            }
        }
    }
    out
}

#[inline]
pub(crate) fn wrap4(j: usize, m: usize) -> (usize, usize, usize, usize) {
    (
        (j + m - 2) % m,
        (j + m - 1) % m,
        (j + 1) % m,
        (j + 2) % m,
    )
}

/// Transformed x-derivative form d̂1(u_n, u_prev) = f5·(u_n − u_prev)/d + (f6/t_n)·∂u_n/∂θ.
///
/// This is (r²/f0)·∂u/∂x evaluated with the solver's backward t-difference.
pub fn hat_d1(
    u_n: ArrayView1<f64>,
    u_prev: ArrayView1<f64>,
    n: usize,
    geo: &GeometryCoefficients,
    grid: &DomainGrid,
) -> Array1<f64> {
    hat_d(u_n, u_prev, n, &geo.f5, &geo.f6, grid)
}

/// Transformed y-derivative form d̂2(v_n, v_prev) = f7·(v_n − v_prev)/d + (f8/t_n)·∂v_n/∂θ.
pub fn hat_d2(
    v_n: ArrayView1<f64>,
    v_prev: ArrayView1<f64>,
    n: usize,
    geo: &GeometryCoefficients,
    grid: &DomainGrid,
) -> Array1<f64> {
    hat_d(v_n, v_prev, n, &geo.f7, &geo.f8, grid)
}

fn hat_d(
    f_n: ArrayView1<f64>,
    f_prev: ArrayView1<f64>,
    n: usize,
    radial: &Array1<f64>,
    angular: &Array1<f64>,
    grid: &DomainGrid,
) -> Array1<f64> {
    assert!(n >= 1 && n <= grid.n_lines, "line index {n} out of range");
    let t_n = grid.t[n];
    let dth = theta_derivative(f_n, DerivOrder::First, grid);
    let mut out = Array1::zeros(grid.n_theta);
    for j in 0..grid.n_theta {
        out[j] = radial[j] * (f_n[j] - f_prev[j]) / grid.d + angular[j] / t_n * dth[j];
    }
    out
}

/// Evaluates the three equations of the solved system at every interior node,
/// in the transformed scaling (the physical residual is h3 times this).
///
/// Returns [momentum-u, momentum-v, closure] as (N−1)×M arrays; row i holds
/// line n = i+1.
pub fn grid_residual_operators(
    state: &FlowState,
    geo: &GeometryCoefficients,
    grid: &DomainGrid,
    nu: f64,
    mode: ResidualMode,
) -> Result<[Array2<f64>; 3], Error> {
    state.dims_checked(grid)?;
    let p = state.p.as_ref().ok_or(Error::ModeMismatch { mode: mode.name() })?;

    let n_lines = grid.n_lines;
    let m = grid.n_theta;
    let mut eq1 = Array2::zeros((n_lines - 1, m));
    let mut eq2 = Array2::zeros((n_lines - 1, m));
    let mut eq3 = Array2::zeros((n_lines - 1, m));

    for n in 1..n_lines {
        let row = n - 1;

        let u_n = state.u.row(n);
        let u_prev = state.u.row(n - 1);
        let u_next = state.u.row(n + 1);
        let v_n = state.v.row(n);
        let v_prev = state.v.row(n - 1);
        let v_next = state.v.row(n + 1);
        let p_n = p.row(n);
        let p_prev = p.row(n - 1);
        let p_next = p.row(n + 1);

        let hd1_u = hat_d1(u_n, u_prev, n, geo, grid);
        let hd2_u = hat_d2(u_n, u_prev, n, geo, grid);
        let hd1_v = hat_d1(v_n, v_prev, n, geo, grid);
        let hd2_v = hat_d2(v_n, v_prev, n, geo, grid);
        let hd1_p = hat_d1(p_n, p_prev, n, geo, grid);
        let hd2_p = hat_d2(p_n, p_prev, n, geo, grid);

        let lap_u = transformed_laplacian(u_next, u_n, u_prev, n, geo, grid);
        let lap_v = transformed_laplacian(v_next, v_n, v_prev, n, geo, grid);

        for j in 0..m {
            eq1[(row, j)] = nu * lap_u[j] - u_n[j] * hd1_u[j] - v_n[j] * hd2_u[j] - hd1_p[j];
            eq2[(row, j)] = nu * lap_v[j] - u_n[j] * hd1_v[j] - v_n[j] * hd2_v[j] - hd2_p[j];
        }
        match mode {
            ResidualMode::PressurePoisson => {
                let lap_p = transformed_laplacian(p_next, p_n, p_prev, n, geo, grid);
                for j in 0..m {
                    let source = geo.h3[j]
                        * (hd1_u[j] * hd1_u[j]
                            + hd2_v[j] * hd2_v[j]
                            + 2.0 * hd2_u[j] * hd1_v[j]);
                    eq3[(row, j)] = lap_p[j] + source;
                }
            }
            ResidualMode::ArtificialCompressibility(eps) => {
                let lap_p = transformed_laplacian(p_next, p_n, p_prev, n, geo, grid);
                for j in 0..m {
                    eq3[(row, j)] = eps * lap_p[j] + hd1_u[j] + hd2_v[j];
                }
            }
            ResidualMode::Continuity => {
                for j in 0..m {
                    eq3[(row, j)] = hd1_u[j] + hd2_v[j];
                }
            }
        }
    }
    Ok([eq1, eq2, eq3])
}

/// L(·)·(r²/f0) on line n: central second t-difference, backward first
/// t-difference, 4th-order θ stencils.
fn transformed_laplacian(
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
    let dt_back: Array1<f64> = (0..m).map(|j| (f_n[j] - f_prev[j]) / d).collect();
    let dth_back = theta_derivative(dt_back.view(), DerivOrder::First, grid);
    let dthth = theta_derivative(f_n, DerivOrder::Second, grid);
    let mut out = Array1::zeros(m);
    for j in 0..m {
        out[j] = (f_next[j] - 2.0 * f_n[j] + f_prev[j]) / (d * d)
            + geo.f2[j] / t_n * dt_back[j]
            + geo.f3[j] / t_n * dth_back[j]
            + geo.f4[j] / (t_n * t_n) * dthth[j];
    }
    out
}
