//! Boundary-data ansatz fit.
//!
//! Each interior line is expanded in a fixed catalogue of θ-functions built
//! from the inner-boundary samples (u₀, v₀, their derivatives, and the free
//! inner pressure trace P₀), and the per-line coefficient arrays are chosen
//! to minimize the residual functional J. The unknown vector stacks
//! [a; b; c; P₀-samples]; the optimizer is damped Gauss–Newton
//! (Levenberg–Marquardt) with a numerically differenced Jacobian.

use ndarray::{Array1, Array2, ArrayView1};
use rayon::prelude::*;

use crate::boundary::BoundaryData;
use crate::error::Error;
use crate::geometry::{DomainGrid, GeometryCoefficients};
use crate::operators::{
    grid_residual_operators, theta_derivative, DerivOrder, FlowState, ResidualMode,
};
use crate::residual::{evaluate_j, Quadrature, ResidualReport, Scaling};
use crate::solver::{solve, PressureClosure, SolverConfig};

/// Number of u-expansion terms per line.
pub const U_TERMS: usize = 11;
/// Number of v-expansion terms per line.
pub const V_TERMS: usize = 11;
/// Number of pressure-expansion terms per line (the printed index list
/// skips 8, so the stored columns are labeled c1–c7, c9, c10).
pub const P_TERMS: usize = 9;

/// Column labels for coefficient CSV export.
pub const U_LABELS: [&str; U_TERMS] = [
    "a1", "a2", "a3", "a4", "a5", "a6", "a7", "a8", "a9", "a10", "a11",
];
pub const V_LABELS: [&str; V_TERMS] = [
    "b1", "b2", "b3", "b4", "b5", "b6", "b7", "b8", "b9", "b10", "b11",
];
pub const P_LABELS: [&str; P_TERMS] = ["c1", "c2", "c3", "c4", "c5", "c6", "c7", "c9", "c10"];

/// Curvature penalty weight on the free inner pressure trace.
const P0_PENALTY: f64 = 1e-8;
/// Forward-difference step rule for the numeric Jacobian.
const JACOBIAN_STEP: f64 = 1e-7;
/// Initial Levenberg–Marquardt damping, with ×10 up/down adjustment.
const INITIAL_DAMPING: f64 = 1e-3;

/// Per-line expansion coefficients: rows are interior lines 1..N−1.
#[derive(Debug, Clone)]
pub struct AnsatzCoefficients {
    pub a: Array2<f64>,
    pub b: Array2<f64>,
    pub c: Array2<f64>,
}

impl AnsatzCoefficients {
    pub fn zeros(n_interior: usize) -> Self {
        Self {
            a: Array2::zeros((n_interior, U_TERMS)),
            b: Array2::zeros((n_interior, V_TERMS)),
            c: Array2::zeros((n_interior, P_TERMS)),
        }
    }

    pub fn n_interior(&self) -> usize {
        self.a.nrows()
    }

    fn all_finite(&self) -> bool {
        self.a.iter().all(|x| x.is_finite())
            && self.b.iter().all(|x| x.is_finite())
            && self.c.iter().all(|x| x.is_finite())
    }
}

/// Basis functions sampled on the θ grid, one column per expansion term.
/// The same matrices serve every line: the catalogue depends only on θ.
#[derive(Debug, Clone)]
pub struct BasisEvaluation {
    pub u: Array2<f64>,
    pub v: Array2<f64>,
    pub p: Array2<f64>,
}

/// Samples the expansion catalogue against the boundary data and the
/// current inner-pressure iterate.
pub fn assemble_basis(
    boundary: &BoundaryData,
    p0: ArrayView1<f64>,
    grid: &DomainGrid,
) -> BasisEvaluation {
    let m = grid.n_theta;
    let u0 = &boundary.u0;
    let v0 = &boundary.v0;
    let u0_d1 = &boundary.u0_d1;
    let u0_d2 = &boundary.u0_d2;
    let v0_d1 = &boundary.v0_d1;
    let v0_d2 = &boundary.v0_d2;
    let p0_d2 = theta_derivative(p0, DerivOrder::Second, grid);

    let mut u = Array2::zeros((m, U_TERMS));
    let mut v = Array2::zeros((m, V_TERMS));
    let mut p = Array2::zeros((m, P_TERMS));
    for j in 0..m {
        let (s, c) = grid.theta[j].sin_cos();
        u[(j, 0)] = c;
        u[(j, 1)] = u0[j];
        u[(j, 2)] = c * u0[j] * u0[j];
        u[(j, 3)] = s * u0[j] * v0[j];
        u[(j, 4)] = s * u0[j] * u0_d1[j];
        u[(j, 5)] = c * v0[j] * u0_d1[j];
        u[(j, 6)] = u0_d2[j];
        u[(j, 7)] = s;
        u[(j, 8)] = s * p0[j];
        u[(j, 9)] = c * p0[j];
        u[(j, 10)] = 1.0;

        v[(j, 0)] = s;
        v[(j, 1)] = v0[j];
        v[(j, 2)] = s * v0[j] * v0[j];
        v[(j, 3)] = c * u0[j] * v0[j];
        v[(j, 4)] = s * u0[j] * v0_d1[j];
        // Mirrors u-term 6; the sibling convention sin x·v₀v₀′ spans the
        // same fit space and differs only in bookkeeping.
        v[(j, 5)] = c * v0[j] * v0_d1[j];
        v[(j, 6)] = v0_d2[j];
        v[(j, 7)] = c;
        v[(j, 8)] = s * p0[j];
        v[(j, 9)] = c * p0[j];
        v[(j, 10)] = 1.0;

        p[(j, 0)] = 1.0;
        p[(j, 1)] = c * u0[j];
        p[(j, 2)] = s * v0[j];
        p[(j, 3)] = s * u0_d1[j];
        p[(j, 4)] = c * v0_d1[j];
        p[(j, 5)] = u0_d2[j];
        p[(j, 6)] = v0_d2[j];
        p[(j, 7)] = p0[j];
        p[(j, 8)] = p0_d2[j];
    }
    BasisEvaluation { u, v, p }
}

/// Builds the full state from coefficients: interior row n of each field is
/// basis × coefficient-row; boundary rows are u₀/v₀/P₀ inside and zeros on
/// the outer curve (outer velocity vanishes by the problem statement; the
/// outer pressure row never enters the residuals, which only look backward).
pub fn evaluate_ansatz(
    coeffs: &AnsatzCoefficients,
    p0: ArrayView1<f64>,
    basis: &BasisEvaluation,
    boundary: &BoundaryData,
    grid: &DomainGrid,
) -> Result<FlowState, Error> {
    let n_int = grid.n_lines - 1;
    let m = grid.n_theta;
    if coeffs.n_interior() != n_int
        || coeffs.a.ncols() != U_TERMS
        || coeffs.b.ncols() != V_TERMS
        || coeffs.c.ncols() != P_TERMS
    {
        return Err(Error::ShapeMismatch(format!(
            "coefficients are {}×{}/{}×{}/{}×{}, grid wants {n_int} interior lines",
            coeffs.a.nrows(),
            coeffs.a.ncols(),
            coeffs.b.nrows(),
            coeffs.b.ncols(),
            coeffs.c.nrows(),
            coeffs.c.ncols(),
        )));
    }
    if basis.u.nrows() != m || p0.len() != m || boundary.n_theta() != m {
        return Err(Error::ShapeMismatch(format!(
            "basis has {} θ-rows, P₀ has {}, boundary has {}, grid wants {m}",
            basis.u.nrows(),
            p0.len(),
            boundary.n_theta(),
        )));
    }
    if !coeffs.all_finite() || p0.iter().any(|x| !x.is_finite()) {
        return Err(Error::ShapeMismatch(
            "coefficients and P₀ samples must be finite".into(),
        ));
    }

    let mut state = FlowState::zeros(grid);
    let mut p = Array2::zeros((grid.n_lines + 1, m));
    for n in 1..grid.n_lines {
        let ur = basis.u.dot(&coeffs.a.row(n - 1));
        let vr = basis.v.dot(&coeffs.b.row(n - 1));
        let pr = basis.p.dot(&coeffs.c.row(n - 1));
        for j in 0..m {
            state.u[(n, j)] = ur[j];
            state.v[(n, j)] = vr[j];
            p[(n, j)] = pr[j];
        }
    }
    for j in 0..m {
        state.u[(0, j)] = boundary.u0[j];
        state.v[(0, j)] = boundary.v0[j];
        p[(0, j)] = p0[j];
    }
    state.p = Some(p);
    Ok(state)
}

/// Fit stopping controls.
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Stop once the pure residual functional J falls to this value.
    pub target: f64,
    /// Gauss–Newton iteration budget per start point.
    pub max_nlls: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            target: 1e-10,
            max_nlls: 200,
        }
    }
}

/// Which start point produced the returned fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartPoint {
    ZeroVector,
    SeededFromSolver,
}

impl StartPoint {
    pub fn name(&self) -> &'static str {
        match self {
            StartPoint::ZeroVector => "zero_vector",
            StartPoint::SeededFromSolver => "seeded_from_solver",
        }
    }
}

/// Everything the fit produced.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub coefficients: AnsatzCoefficients,
    pub p0: Array1<f64>,
    pub state: FlowState,
    pub report: ResidualReport,
    pub target: f64,
    pub iterations: usize,
    /// Penalized objective after every accepted step (non-increasing).
    pub accepted_objectives: Vec<f64>,
    pub start_used: StartPoint,
}

struct Packing {
    n_int: usize,
    m: usize,
    a_off: usize,
    b_off: usize,
    c_off: usize,
    p0_off: usize,
    total: usize,
    eq_rows: usize,
}

impl Packing {
    fn new(grid: &DomainGrid) -> Self {
        let n_int = grid.n_lines - 1;
        let m = grid.n_theta;
        let a_off = 0;
        let b_off = a_off + n_int * U_TERMS;
        let c_off = b_off + n_int * V_TERMS;
        let p0_off = c_off + n_int * P_TERMS;
        Self {
            n_int,
            m,
            a_off,
            b_off,
            c_off,
            p0_off,
            total: p0_off + m,
            eq_rows: 3 * n_int * m,
        }
    }

    fn unpack(&self, x: &Array1<f64>) -> (AnsatzCoefficients, Array1<f64>) {
        let mut coeffs = AnsatzCoefficients::zeros(self.n_int);
        for n in 0..self.n_int {
            for k in 0..U_TERMS {
                coeffs.a[(n, k)] = x[self.a_off + n * U_TERMS + k];
            }
            for k in 0..V_TERMS {
                coeffs.b[(n, k)] = x[self.b_off + n * V_TERMS + k];
            }
            for k in 0..P_TERMS {
                coeffs.c[(n, k)] = x[self.c_off + n * P_TERMS + k];
            }
        }
        let p0 = Array1::from_iter((0..self.m).map(|j| x[self.p0_off + j]));
        (coeffs, p0)
    }

    fn pack(&self, coeffs: &AnsatzCoefficients, p0: &Array1<f64>) -> Array1<f64> {
        let mut x = Array1::zeros(self.total);
        for n in 0..self.n_int {
            for k in 0..U_TERMS {
                x[self.a_off + n * U_TERMS + k] = coeffs.a[(n, k)];
            }
            for k in 0..V_TERMS {
                x[self.b_off + n * V_TERMS + k] = coeffs.b[(n, k)];
            }
            for k in 0..P_TERMS {
                x[self.c_off + n * P_TERMS + k] = coeffs.c[(n, k)];
            }
        }
        for j in 0..self.m {
            x[self.p0_off + j] = p0[j];
        }
        x
    }
}

/// Stacked residual vector: the three equation fields flattened, then the
/// P₀ regularization rows √λ·P₀″ plus one √λ·mean(P₀) anchor. The anchor
/// removes the exact flat direction "add a constant to P₀ and every
/// interior pressure row" (the outer pressure row is frozen and no residual
/// reads it, so pure J cannot see that shift; the curvature rows cannot
/// either).
fn residual_vector(
    coeffs: &AnsatzCoefficients,
    p0: &Array1<f64>,
    boundary: &BoundaryData,
    geo: &GeometryCoefficients,
    grid: &DomainGrid,
    nu: f64,
) -> Result<Array1<f64>, Error> {
    let basis = assemble_basis(boundary, p0.view(), grid);
    let state = evaluate_ansatz(coeffs, p0.view(), &basis, boundary, grid)?;
    let [e1, e2, e3] = grid_residual_operators(&state, geo, grid, nu, ResidualMode::Continuity)?;
    let pk = Packing::new(grid);
    let mut r = Array1::zeros(pk.eq_rows + pk.m + 1);
    let mut idx = 0;
    for eq in [&e1, &e2, &e3] {
        for row in 0..pk.n_int {
            for j in 0..pk.m {
                r[idx] = eq[(row, j)];
                idx += 1;
            }
        }
    }
    let sqrt_pen = P0_PENALTY.sqrt();
    let p0_d2 = theta_derivative(p0.view(), DerivOrder::Second, grid);
    for j in 0..pk.m {
        r[idx] = sqrt_pen * p0_d2[j];
        idx += 1;
    }
    let mean: f64 = p0.iter().sum::<f64>() / pk.m as f64;
    r[idx] = sqrt_pen * mean;
    Ok(r)
}

fn pure_j(r: &Array1<f64>, eq_rows: usize) -> f64 {
    r.iter().take(eq_rows).map(|x| x * x).sum()
}

fn objective(r: &Array1<f64>) -> f64 {
    r.iter().map(|x| x * x).sum()
}

/// In-place Cholesky solve of the SPD system `h·x = rhs`. Returns `None`
/// when a pivot is non-positive (caller raises the damping and retries).
fn cholesky_solve(mut h: Array2<f64>, mut rhs: Array1<f64>) -> Option<Array1<f64>> {
    let n = h.nrows();
    for k in 0..n {
        let mut pivot = h[(k, k)];
        for q in 0..k {
            pivot -= h[(k, q)] * h[(k, q)];
        }
        if pivot <= 0.0 || !pivot.is_finite() {
            return None;
        }
        let pivot = pivot.sqrt();
        h[(k, k)] = pivot;
        for i in (k + 1)..n {
            let mut val = h[(i, k)];
            for q in 0..k {
                val -= h[(i, q)] * h[(k, q)];
            }
            h[(i, k)] = val / pivot;
        }
    }
    for i in 0..n {
        let mut val = rhs[i];
        for q in 0..i {
            val -= h[(i, q)] * rhs[q];
        }
        rhs[i] = val / h[(i, i)];
    }
    for i in (0..n).rev() {
        let mut val = rhs[i];
        for q in (i + 1)..n {
            val -= h[(q, i)] * rhs[q];
        }
        rhs[i] = val / h[(i, i)];
    }
    Some(rhs)
}

struct StartResult {
    x: Array1<f64>,
    pure: f64,
    iterations: usize,
    accepted: Vec<f64>,
}

/// One Levenberg–Marquardt descent from `x0`.
fn run_lm(
    x0: Array1<f64>,
    boundary: &BoundaryData,
    geo: &GeometryCoefficients,
    grid: &DomainGrid,
    nu: f64,
    options: &FitOptions,
) -> Result<StartResult, Error> {
    let pk = Packing::new(grid);
    let eval = |x: &Array1<f64>| -> Result<Array1<f64>, Error> {
        let (coeffs, p0) = pk.unpack(x);
        residual_vector(&coeffs, &p0, boundary, geo, grid, nu)
    };

    let mut x = x0;
    let mut r = eval(&x)?;
    let mut obj = objective(&r);
    let mut accepted = vec![obj];
    let mut damping = INITIAL_DAMPING;
    let mut iterations = 0;

    for _ in 0..options.max_nlls {
        if pure_j(&r, pk.eq_rows) <= options.target {
            break;
        }
        iterations += 1;

        // Forward-difference Jacobian, one column per unknown.
        let n_rows = r.len();
        let cols: Vec<Array1<f64>> = (0..pk.total)
            .into_par_iter()
            .map(|k| {
                let step = JACOBIAN_STEP * (1.0 + x[k].abs());
                let mut xp = x.clone();
                xp[k] += step;
                match eval(&xp) {
                    Ok(rp) => {
                        let mut col = Array1::zeros(n_rows);
                        for i in 0..n_rows {
                            col[i] = (rp[i] - r[i]) / step;
                        }
                        col
                    }
                    Err(_) => Array1::zeros(n_rows),
                }
            })
            .collect();
        let mut jac = Array2::zeros((n_rows, pk.total));
        for (k, col) in cols.iter().enumerate() {
            jac.column_mut(k).assign(col);
        }

        let jt = jac.t();
        let h = jt.dot(&jac);
        let g = jt.dot(&r);

        let mut accepted_step = false;
        for _ in 0..30 {
            let mut hd = h.clone();
            for k in 0..pk.total {
                let dk = h[(k, k)].max(1e-12);
                hd[(k, k)] += damping * dk;
            }
            let delta = match cholesky_solve(hd, -&g) {
                Some(d) => d,
                None => {
                    damping *= 10.0;
                    continue;
                }
            };
            let x_try = &x + &delta;
            let r_try = match eval(&x_try) {
                Ok(rt) => rt,
                Err(_) => {
                    damping *= 10.0;
                    continue;
                }
            };
            let obj_try = objective(&r_try);
            if obj_try.is_finite() && obj_try < obj {
                x = x_try;
                r = r_try;
                obj = obj_try;
                accepted.push(obj);
                damping = (damping / 10.0).max(1e-14);
                accepted_step = true;
                break;
            }
            damping *= 10.0;
        }
        if !accepted_step {
            break; // stalled: damping exhausted without descent
        }
    }
    let pure = pure_j(&r, pk.eq_rows);
    Ok(StartResult {
        x,
        pure,
        iterations,
        accepted,
    })
}

/// Projects a solver state onto the catalogue, line by line, to seed the
/// second start. Ridge-regularized normal equations keep near-collinear
/// columns harmless.
fn project_state(
    state: &FlowState,
    boundary: &BoundaryData,
    grid: &DomainGrid,
) -> (AnsatzCoefficients, Array1<f64>) {
    let pk = Packing::new(grid);
    let p0 = Array1::zeros(pk.m);
    let basis = assemble_basis(boundary, p0.view(), grid);
    let mut coeffs = AnsatzCoefficients::zeros(pk.n_int);
    let p = state.p.as_ref();
    let project = |b: &Array2<f64>, y: ArrayView1<f64>| -> Array1<f64> {
        let bt = b.t();
        let mut h = bt.dot(b);
        for k in 0..h.nrows() {
            h[(k, k)] += 1e-10;
        }
        let g = bt.dot(&y);
        cholesky_solve(h, g).unwrap_or_else(|| Array1::zeros(b.ncols()))
    };
    for n in 1..grid.n_lines {
        let arow = project(&basis.u, state.u.row(n));
        let brow = project(&basis.v, state.v.row(n));
        coeffs.a.row_mut(n - 1).assign(&arow);
        coeffs.b.row_mut(n - 1).assign(&brow);
        if let Some(p) = p {
            let crow = project(&basis.p, p.row(n));
            coeffs.c.row_mut(n - 1).assign(&crow);
        }
    }
    (coeffs, p0)
}

/// Seed state from the solver in artificial-compressibility mode. The
/// nominal ε = 1e-3 couples pressure and velocity so strongly on fine
/// meshes that the inner maps spiral outward; the deterministic ladder
/// retries with progressively softer regularization and uses the first
/// run that converges.
fn seeded_start(
    boundary: &BoundaryData,
    geo: &GeometryCoefficients,
    grid: &DomainGrid,
    nu: f64,
) -> Option<(AnsatzCoefficients, Array1<f64>)> {
    for eps in [1e-3, 3e-3, 1e-2, 3e-2, 1e-1] {
        let config = SolverConfig::new(nu, PressureClosure::ArtificialCompressibility(eps));
        match solve(boundary, geo, grid, &config) {
            Ok((state, _)) => return Some(project_state(&state, boundary, grid)),
            Err(_) => continue,
        }
    }
    None
}

/// Minimizes J over the stacked coefficient vector. Runs a descent from
/// the zero vector first; if the target is missed it retries from a
/// solver-seeded start and keeps the better result. A miss returns
/// `TargetNotReached` carrying the best outcome (soft failure).
pub fn fit(
    boundary: &BoundaryData,
    geo: &GeometryCoefficients,
    grid: &DomainGrid,
    nu: f64,
    options: &FitOptions,
) -> Result<FitOutcome, Error> {
    if boundary.n_theta() != grid.n_theta {
        return Err(Error::ShapeMismatch(format!(
            "boundary has {} θ-samples, grid wants {}",
            boundary.n_theta(),
            grid.n_theta
        )));
    }
    if !(options.target > 0.0) || options.max_nlls == 0 {
        return Err(Error::ValidationError {
            field: "fit options".into(),
            message: "target must be positive and max_nlls at least 1".into(),
        });
    }
    let pk = Packing::new(grid);

    let zero_start = run_lm(
        Array1::zeros(pk.total),
        boundary,
        geo,
        grid,
        nu,
        options,
    )?;

    let mut best = zero_start;
    let mut start_used = StartPoint::ZeroVector;
    if best.pure > options.target {
        if let Some((coeffs, p0)) = seeded_start(boundary, geo, grid, nu) {
            let seeded = run_lm(pk.pack(&coeffs, &p0), boundary, geo, grid, nu, options)?;
            if seeded.pure < best.pure {
                best = seeded;
                start_used = StartPoint::SeededFromSolver;
            }
        }
    }

    let (coefficients, p0) = pk.unpack(&best.x);
    let basis = assemble_basis(boundary, p0.view(), grid);
    let state = evaluate_ansatz(&coefficients, p0.view(), &basis, boundary, grid)?;
    let report = evaluate_j(
        &state,
        geo,
        grid,
        nu,
        Quadrature::UnitWeighted,
        Scaling::Transformed,
    )?;
    let outcome = FitOutcome {
        coefficients,
        p0,
        state,
        report,
        target: options.target,
        iterations: best.iterations,
        accepted_objectives: best.accepted,
        start_used,
    };
    if outcome.report.j <= options.target {
        Ok(outcome)
    } else {
        Err(Error::TargetNotReached(Box::new(outcome)))
    }
}
