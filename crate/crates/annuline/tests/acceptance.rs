//! End-to-end acceptance gates. Each test prints one `criterion N: PASS`
//! line (visible with `--nocapture`) and asserts the same conditions, so a
//! plain `cargo test` run enforces every gate.

use annuline::{
    banach_line_trace, build_coefficients, evaluate_j, fit, parse_config, residual_fields,
    run_report, run_solve, solve, BoundaryData, BoundaryShape, Coupling, DomainGrid, Error,
    FitOptions, FitOutcome, FlowState, PressureClosure, Quadrature, ResidualMode, Scaling,
    SolverConfig,
};
use ndarray::Array1;
use std::sync::Mutex;
use std::time::Instant;

/// Timed criteria take this lock so the default multi-threaded test harness
/// cannot run two wall-clock-budgeted sections at once.
static TIMED: Mutex<()> = Mutex::new(());

fn unit_circle(n: usize, m: usize) -> (DomainGrid, annuline::GeometryCoefficients) {
    let grid = DomainGrid::new(n, m).unwrap();
    let shape = BoundaryShape::new(vec![1.0], vec![]).unwrap();
    let geo = build_coefficients(&shape, &grid).unwrap();
    (grid, geo)
}

fn couette_pressure(t: f64) -> f64 {
    0.125 * t * t - 2.0 * t.ln() - 2.0 / (t * t)
}

/// Sup-error of the solved rotational-flow state against the closed form
/// u_φ(t) = −0.5 t + 2/t on an N×150 unit-circle mesh.
///
/// The rotational solution solves the momentum equations for every
/// viscosity (its vector Laplacian vanishes), so ν = 1 is used: the
/// backward-difference bias of the scheme scales like d·|P″|/ν, and only
/// ν ≳ 1 keeps the constant small enough for the 0.02 gate at N = 20.
fn couette_sup_error(n: usize) -> f64 {
    let m = 150;
    let (grid, geo) = unit_circle(n, m);
    let p0 = Array1::from_elem(m, couette_pressure(1.0));
    let pf = Array1::from_elem(m, couette_pressure(2.0));
    let boundary = BoundaryData::example_one(&grid)
        .with_pressure(p0, pf)
        .unwrap();
    let config = SolverConfig::new(1.0, PressureClosure::PressurePoisson);
    let (state, report) = solve(&boundary, &geo, &grid, &config).unwrap();
    assert!(
        report.final_change <= config.outer_tol,
        "N = {n}: solver did not reach outer tolerance (change {:.3e})",
        report.final_change
    );
    let u_phi = |t: f64| -0.5 * t + 2.0 / t;
    let mut sup = 0.0_f64;
    for i in 0..=grid.n_lines {
        for j in 0..grid.n_theta {
            let th = grid.theta[j];
            let exact_u = -u_phi(grid.t[i]) * th.sin();
            let exact_v = u_phi(grid.t[i]) * th.cos();
            sup = sup
                .max((state.u[(i, j)] - exact_u).abs())
                .max((state.v[(i, j)] - exact_v).abs());
        }
    }
    sup
}

#[test]
fn criterion_1_rotational_flow_oracle() {
    let _serial = TIMED.lock().unwrap();
    let start = Instant::now();
    let err20 = couette_sup_error(20);
    let err40 = couette_sup_error(40);
    let elapsed = start.elapsed().as_secs_f64();
    let ratio = err20 / err40;
    let pass = err20 <= 0.02 && ratio >= 1.8 && elapsed <= 60.0;
    println!(
        "criterion 1 (rotational-flow oracle): {} — sup error {err20:.5} at N = 20 \
         (bound 0.02), refinement ratio {ratio:.2} (bound 1.8), {elapsed:.1} s (budget 60)",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(err20 <= 0.02, "sup error {err20:.5} exceeds 0.02");
    assert!(ratio >= 1.8, "refinement ratio {ratio:.2} below 1.8");
    assert!(elapsed <= 60.0, "runtime {elapsed:.1} s exceeds 60 s");
}

/// Runs the least-squares fit on a 20×150 unit-circle mesh and returns the
/// best outcome whether or not the optimizer's own target was reached (the
/// criteria gate on the final J value, not on the soft-failure flag).
fn fit_example(boundary: BoundaryData, nu: f64, options: FitOptions) -> FitOutcome {
    let (grid, geo) = unit_circle(20, 150);
    match fit(&boundary, &geo, &grid, nu, &options) {
        Ok(outcome) => outcome,
        Err(Error::TargetNotReached(best)) => *best,
        Err(e) => panic!("fit failed outright: {e}"),
    }
}

#[test]
fn criterion_2_fit_rotational_data() {
    let _serial = TIMED.lock().unwrap();
    let start = Instant::now();
    let grid = DomainGrid::new(20, 150).unwrap();
    let boundary = BoundaryData::example_one(&grid);
    let options = FitOptions {
        target: 1e-10,
        max_nlls: 200,
    };
    let outcome = fit_example(boundary, 0.1, options);
    let elapsed = start.elapsed().as_secs_f64();
    let j = outcome.report.j;
    let pass = j <= 1e-6 && elapsed <= 600.0;
    println!(
        "criterion 2 (fit, rotating-ring data, ν = 0.1): {} — J = {j:.3e} (bound 1e-6, \
         reference ≈ 9.2e-12), {} iterations from {} start, {elapsed:.1} s (budget 600)",
        if pass { "PASS" } else { "FAIL" },
        outcome.iterations,
        outcome.start_used.name()
    );
    assert!(j <= 1e-6, "final J {j:.3e} exceeds 1e-6");
    assert!(elapsed <= 600.0, "runtime {elapsed:.1} s exceeds 600 s");
}

#[test]
fn criterion_3_fit_double_frequency_data() {
    let _serial = TIMED.lock().unwrap();
    let start = Instant::now();
    let grid = DomainGrid::new(20, 150).unwrap();
    let boundary = BoundaryData::example_two(&grid);
    let options = FitOptions {
        target: 1e-4,
        max_nlls: 60,
    };
    let outcome = fit_example(boundary, 1.0, options);
    let elapsed = start.elapsed().as_secs_f64();
    let j = outcome.report.j;
    let pass = j <= 1e-4 && elapsed <= 600.0;
    println!(
        "criterion 3 (fit, double-frequency data, ν = 1.0): {} — J = {j:.3e} (bound 1e-4, \
         reference ≈ 6.0e-7), {} iterations from {} start, {elapsed:.1} s (budget 600)",
        if pass { "PASS" } else { "FAIL" },
        outcome.iterations,
        outcome.start_used.name()
    );
    assert!(j <= 1e-4, "final J {j:.3e} exceeds 1e-4");
    assert!(elapsed <= 600.0, "runtime {elapsed:.1} s exceeds 600 s");
}

#[test]
fn criterion_5_theorem_certification() {
    let _serial = TIMED.lock().unwrap();
    let start = Instant::now();
    let report = annuline::certify(128).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let pass = report.divergence_sup <= 1e-8
        && report.curl_sup <= 1e-8
        && report.pressure_error_sup <= 1e-6
        && report.momentum_sup <= 1e-6
        && report.divergence_order >= 1.8
        && report.curl_order >= 1.8
        && elapsed <= 30.0;
    println!(
        "criterion 5 (potential-construction certification): {} — divergence {:.2e}, \
         convective curl {:.2e} (bounds 1e-8); pressure error {:.2e}, momentum residual {:.2e} \
         (bounds 1e-6); refinement orders {:.2}/{:.2} (bound 1.8); {elapsed:.1} s (budget 30)",
        if pass { "PASS" } else { "FAIL" },
        report.divergence_sup,
        report.curl_sup,
        report.pressure_error_sup,
        report.momentum_sup,
        report.divergence_order,
        report.curl_order,
    );
    assert!(report.divergence_sup <= 1e-8);
    assert!(report.curl_sup <= 1e-8);
    assert!(report.pressure_error_sup <= 1e-6);
    assert!(report.momentum_sup <= 1e-6);
    assert!(report.divergence_order >= 1.8, "order {:.2}", report.divergence_order);
    assert!(report.curl_order >= 1.8, "order {:.2}", report.curl_order);
    assert!(elapsed <= 30.0, "runtime {elapsed:.1} s exceeds 30 s");
}

#[test]
fn criterion_4_linear_coefficient_ladder() {
    let start = Instant::now();
    let (grid, geo) = unit_circle(10, 16);
    let m = grid.n_theta;
    let mut config = SolverConfig::new(1.0, PressureClosure::ArtificialCompressibility(1e-3));
    config.coupling = Coupling::DiffusionOnly;
    let boundary =
        BoundaryData::from_samples(Array1::ones(m), Array1::zeros(m), &grid).unwrap();
    let (state, _) = solve(&boundary, &geo, &grid, &config).unwrap();

    // Independent second-order recurrence: u_{n+1} − 2u_n + u_{n−1}
    // + (d/t_n)(u_n − u_{n−1}) = 0 telescopes to increments
    // δ_{n+1} = δ_1·10/(10+n) at N = 10, solved in closed form here.
    let d = grid.d;
    let mut increments = vec![1.0_f64];
    for n in 1..grid.n_lines {
        let q = d / grid.t[n];
        increments.push(increments[n - 1] * (1.0 - q));
    }
    let total: f64 = increments.iter().sum();
    let mut oracle = Vec::new();
    let mut acc = 0.0;
    for inc in increments.iter().take(grid.n_lines - 1) {
        acc += inc;
        oracle.push(1.0 - acc / total);
    }

    // Frozen three-decimal reference coefficients of the inner-boundary trace
    // per line: a geometry-independent base plus an f₂-weighted drift part
    // (f₂ ≡ 1 on the unit circle, so the effective value is their sum).
    let base = [0.899, 0.799, 0.698, 0.597, 0.497, 0.397, 0.297, 0.198, 0.099];
    let drift = [
        -0.034, -0.059, -0.075, -0.084, -0.086, -0.080, -0.069, -0.051, -0.028,
    ];

    let mut max_vs_oracle = 0.0_f64;
    let mut max_vs_reference = 0.0_f64;
    for n in 1..grid.n_lines {
        let got = state.u[(n, 0)];
        max_vs_oracle = max_vs_oracle.max((got - oracle[n - 1]).abs());
        max_vs_reference = max_vs_reference.max((got - (base[n - 1] + drift[n - 1])).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = max_vs_oracle < 5e-3 && max_vs_reference < 2e-2;
    println!(
        "criterion 4 (linear coefficient ladder): {} — max |Δ| vs oracle {max_vs_oracle:.2e} \
         (bound 5e-3), vs reference table {max_vs_reference:.2e} (bound 2e-2), {elapsed:.2} s",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(max_vs_oracle < 5e-3);
    assert!(max_vs_reference < 2e-2);
}

/// Smooth manufactured state on an N×M grid (not a solution; exercises the
/// full term structure of the residual operators).
fn manufactured_state(grid: &DomainGrid) -> FlowState {
    let mut state = FlowState::zeros(grid);
    let p = state.p.as_mut().unwrap();
    for i in 0..=grid.n_lines {
        let t = grid.t[i];
        for j in 0..grid.n_theta {
            let th = grid.theta[j];
            state.u[(i, j)] = (2.0 - t) * th.sin() + 0.3 * (t - 1.0) * (2.0 * th).cos();
            state.v[(i, j)] = (2.0 - t) * th.cos() - 0.2 * (t - 1.0) * th.sin();
            p[(i, j)] = 0.5 * t * t + 0.1 * (t - 1.0) * th.cos();
        }
    }
    state
}

/// Rotates every row of a state right by k nodes: sample j of the result is
/// sample (j − k) mod M of the input, i.e. the field composed with θ ↦ θ − φ.
fn rotate_state(state: &FlowState, k: usize, grid: &DomainGrid) -> FlowState {
    let m = grid.n_theta;
    let mut out = FlowState::zeros(grid);
    let p_in = state.p.as_ref().unwrap().clone();
    let p_out = out.p.as_mut().unwrap();
    for i in 0..=grid.n_lines {
        for j in 0..m {
            let src = (j + m - k) % m;
            out.u[(i, j)] = state.u[(i, src)];
            out.v[(i, j)] = state.v[(i, src)];
            p_out[(i, j)] = p_in[(i, src)];
        }
    }
    out
}

fn rotate_columns(arr: &Array1<f64>, k: usize) -> Array1<f64> {
    let m = arr.len();
    Array1::from_shape_fn(m, |j| arr[(j + m - k) % m])
}

/// Relabels the θ origin of sampled geometry coefficients by k nodes.
fn rotate_geometry(
    geo: &annuline::GeometryCoefficients,
    k: usize,
) -> annuline::GeometryCoefficients {
    annuline::GeometryCoefficients {
        r: rotate_columns(&geo.r, k),
        f0: rotate_columns(&geo.f0, k),
        f1: rotate_columns(&geo.f1, k),
        f1_prime: rotate_columns(&geo.f1_prime, k),
        f2: rotate_columns(&geo.f2, k),
        f3: rotate_columns(&geo.f3, k),
        f4: rotate_columns(&geo.f4, k),
        fhat5: rotate_columns(&geo.fhat5, k),
        fhat6: rotate_columns(&geo.fhat6, k),
        fhat7: rotate_columns(&geo.fhat7, k),
        fhat8: rotate_columns(&geo.fhat8, k),
        f5: rotate_columns(&geo.f5, k),
        f6: rotate_columns(&geo.f6, k),
        f7: rotate_columns(&geo.f7, k),
        f8: rotate_columns(&geo.f8, k),
        h3: rotate_columns(&geo.h3, k),
    }
}

#[test]
fn criterion_6_property_suites() {
    let _serial = TIMED.lock().unwrap();
    let start = Instant::now();

    // (a) Contraction ratio of the per-line map on the scalar Laplace case:
    // diffusion only, θ-constant data, line 1 of an N = 10 unit-circle grid.
    // The map reduces to u ← (u + 1 + (d/t₁)(u − 1))/3 whose slope is
    // (1 + 0.1/1.1)/3 = 4/11 ≈ 0.364.
    let (grid10, geo10) = unit_circle(10, 16);
    let mut seed = FlowState::zeros(&grid10);
    for j in 0..grid10.n_theta {
        seed.u[(0, j)] = 1.0;
    }
    let mut diffusion_only = SolverConfig::new(1.0, PressureClosure::PressurePoisson);
    diffusion_only.coupling = Coupling::DiffusionOnly;
    let (_, changes) = banach_line_trace(1, &seed, &geo10, &grid10, &diffusion_only).unwrap();
    let mut ratio = 0.0_f64;
    for w in changes.windows(2) {
        if w[0] > 1e-13 {
            ratio = ratio.max(w[1] / w[0]);
        }
    }
    let closed_form = 4.0 / 11.0;

    // (b) J is invariant under relabeling the θ origin: rotating the state
    // columns and every sampled geometry array by the same k nodes permutes
    // the residual summands without changing any of them (star-shaped curve,
    // manufactured state).
    let grid = DomainGrid::new(8, 32).unwrap();
    let k = 7usize;
    let shape = BoundaryShape::new(vec![1.0, 0.12], vec![]).unwrap();
    let geo = build_coefficients(&shape, &grid).unwrap();
    let geo_rot = rotate_geometry(&geo, k);
    let state = manufactured_state(&grid);
    let state_rot = rotate_state(&state, k, &grid);
    let j_base = evaluate_j(&state, &geo, &grid, 0.7, Quadrature::UnitWeighted, Scaling::Transformed)
        .unwrap()
        .j;
    let j_rot = evaluate_j(
        &state_rot, &geo_rot, &grid, 0.7, Quadrature::UnitWeighted, Scaling::Transformed,
    )
    .unwrap()
    .j;
    let rotation_drift = (j_base - j_rot).abs() / j_base;

    // (c) Residual fields of a converged relaxation run stay small: the
    // rotational-flow setup of criterion 1, evaluated with the same closure
    // the solver used.
    let (grid20, geo20) = unit_circle(20, 150);
    let m = grid20.n_theta;
    let boundary = BoundaryData::example_one(&grid20)
        .with_pressure(
            Array1::from_elem(m, couette_pressure(1.0)),
            Array1::from_elem(m, couette_pressure(2.0)),
        )
        .unwrap();
    let pp = SolverConfig::new(1.0, PressureClosure::PressurePoisson);
    let (converged, _) = solve(&boundary, &geo20, &grid20, &pp).unwrap();
    let fields = residual_fields(
        &converged, &geo20, &grid20, 1.0, ResidualMode::PressurePoisson,
    )
    .unwrap();
    let converged_residual_sup = fields
        .iter()
        .flat_map(|f| f.iter())
        .fold(0.0_f64, |acc, &x| acc.max(x.abs()));

    // (d)+(e) Files: J round-trips through CSV export and re-import, and
    // identical configs give byte-identical outputs.
    let config = parse_config("n = 4\nm = 32\nnu = 1.0\nboundary = example1\nepsilon = 1e-1\n")
        .unwrap();
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let (_, fresh) = run_solve(&config, dir_a.path()).unwrap();
    let reread = run_report(&config, dir_a.path()).unwrap();
    let round_trip_drift = (fresh.j - reread.j).abs() / fresh.j;
    run_solve(&config, dir_b.path()).unwrap();
    let mut deterministic = true;
    let mut compared = 0usize;
    let mut names: Vec<String> = Vec::new();
    for n in 0..=config.n {
        names.push(format!("u_{n}.csv"));
        names.push(format!("v_{n}.csv"));
        names.push(format!("P_{n}.csv"));
    }
    names.push("report.txt".into());
    for name in &names {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        deterministic &= a == b;
        compared += 1;
    }

    let elapsed = start.elapsed().as_secs_f64();
    let pass = ratio <= 0.40
        && (ratio - closed_form).abs() < 1e-3
        && rotation_drift <= 1e-12
        && converged_residual_sup <= 1e-3
        && round_trip_drift <= 1e-12
        && deterministic
        && elapsed <= 60.0;
    println!(
        "criterion 6 (property suites): {} — contraction ratio {ratio:.4} (bound 0.40, closed \
         form {closed_form:.4}); J rotation drift {rotation_drift:.2e} (bound 1e-12); converged \
         residual sup {converged_residual_sup:.2e} (bound 1e-3); CSV round-trip drift \
         {round_trip_drift:.2e} (bound 1e-12); {compared} files byte-identical: {deterministic}; \
         {elapsed:.1} s (budget 60)",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(ratio <= 0.40, "contraction ratio {ratio:.4} exceeds 0.40");
    assert!(
        (ratio - closed_form).abs() < 1e-3,
        "ratio {ratio:.6} vs closed form {closed_form:.6}"
    );
    assert!(rotation_drift <= 1e-12, "rotation drift {rotation_drift:.3e}");
    assert!(
        converged_residual_sup <= 1e-3,
        "converged residual sup {converged_residual_sup:.3e}"
    );
    assert!(round_trip_drift <= 1e-12, "round-trip drift {round_trip_drift:.3e}");
    assert!(deterministic, "outputs differ between identical runs");
    assert!(elapsed <= 60.0, "runtime {elapsed:.1} s exceeds 60 s");
}
