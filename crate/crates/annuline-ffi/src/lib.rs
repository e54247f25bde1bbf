//! C ABI over the annuline solver library.
//!
//! Conventions:
//!
//! * Every function returns a status code: [`ANNULINE_OK`] (0),
//!   [`ANNULINE_ERR_NUMERIC`] (1, solver or fit failed numerically),
//!   [`ANNULINE_ERR_CONFIG`] (2, invalid configuration or argument),
//!   [`ANNULINE_ERR_NULL`] (3, a required pointer was null), or
//!   [`ANNULINE_ERR_PANIC`] (4, internal panic caught at the boundary —
//!   a bug, never expected).
//! * Objects cross the boundary as opaque handles created and destroyed by
//!   this library; output handles are written only on `ANNULINE_OK`.
//! * [`annuline_last_error`] returns a thread-local, NUL-terminated
//!   description of the most recent failure on the calling thread.
//! * No function blocks on another handle: handles are not internally
//!   synchronized, so a single handle must not be used from two threads at
//!   once, but distinct handles are independent.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use annuline::config::{parse_config, RunConfig};
use annuline::error::Error;
use annuline::io::load_boundary;
use annuline::operators::FlowState;
use annuline::solver::solve;
use annuline::{build_coefficients, fit};

/// Success.
pub const ANNULINE_OK: i32 = 0;
/// Numeric failure: no convergence, fit target missed, or a certification
/// defect.
pub const ANNULINE_ERR_NUMERIC: i32 = 1;
/// Invalid configuration text, field value, or function argument.
pub const ANNULINE_ERR_CONFIG: i32 = 2;
/// A required pointer argument was null.
pub const ANNULINE_ERR_NULL: i32 = 3;
/// Internal panic caught at the language boundary.
pub const ANNULINE_ERR_PANIC: i32 = 4;

/// Selects the horizontal velocity field in [`annuline_solution_field`].
pub const ANNULINE_FIELD_U: i32 = 0;
/// Selects the vertical velocity field in [`annuline_solution_field`].
pub const ANNULINE_FIELD_V: i32 = 1;
/// Selects the pressure field in [`annuline_solution_field`].
pub const ANNULINE_FIELD_P: i32 = 2;

/// Parsed and validated run configuration (opaque).
pub struct AnnulineConfig {
    inner: RunConfig,
}

/// A computed flow state on the (N+1) × M node grid (opaque).
pub struct AnnulineSolution {
    state: FlowState,
    n_lines: usize,
    n_theta: usize,
    j: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let owned = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("error message unavailable").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = owned);
}

fn status_of(e: &Error) -> i32 {
    match e.exit_code() {
        2 => ANNULINE_ERR_CONFIG,
        _ => ANNULINE_ERR_NUMERIC,
    }
}

fn guarded(f: impl FnOnce() -> i32) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(code) => code,
        Err(_) => {
            set_error("internal panic");
            ANNULINE_ERR_PANIC
        }
    }
}

/// Returns a pointer to a NUL-terminated description of the most recent
/// failure on the calling thread, or an empty string if none occurred. The
/// pointer stays valid until the next call into this library on the same
/// thread; copy the string if it must outlive that.
#[no_mangle]
pub extern "C" fn annuline_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Parses a flat `key = value` configuration document.
///
/// On `ANNULINE_OK`, `*out` receives a handle that must be released with
/// [`annuline_config_free`].
///
/// # Safety
///
/// `text` must point to a NUL-terminated UTF-8 string and `out` to a
/// writable `AnnulineConfig*` slot; both must stay valid for the call.
#[no_mangle]
pub unsafe extern "C" fn annuline_config_parse(
    text: *const c_char,
    out: *mut *mut AnnulineConfig,
) -> i32 {
    guarded(|| {
        if text.is_null() || out.is_null() {
            set_error("null pointer argument");
            return ANNULINE_ERR_NULL;
        }
        let Ok(text) = unsafe { CStr::from_ptr(text) }.to_str() else {
            set_error("configuration text is not valid UTF-8");
            return ANNULINE_ERR_CONFIG;
        };
        match parse_config(text) {
            Ok(inner) => {
                unsafe { *out = Box::into_raw(Box::new(AnnulineConfig { inner })) };
                ANNULINE_OK
            }
            Err(e) => {
                set_error(&e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Releases a configuration handle. Passing null is a no-op.
///
/// # Safety
///
/// `config` must be null or a handle obtained from
/// [`annuline_config_parse`] that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn annuline_config_free(config: *mut AnnulineConfig) {
    if !config.is_null() {
        drop(unsafe { Box::from_raw(config) });
    }
}

fn run_to_solution(
    config: &RunConfig,
    run: impl FnOnce(&RunConfig) -> Result<(FlowState, f64), Error>,
    out: *mut *mut AnnulineSolution,
) -> i32 {
    match run(config) {
        Ok((state, j)) => {
            let solution = AnnulineSolution {
                n_lines: state.u.nrows() - 1,
                n_theta: state.u.ncols(),
                state,
                j,
            };
            unsafe { *out = Box::into_raw(Box::new(solution)) };
            ANNULINE_OK
        }
        Err(e) => {
            set_error(&e.to_string());
            status_of(&e)
        }
    }
}

/// Relaxes the coupled line maps to a steady state.
///
/// On `ANNULINE_OK`, `*out` receives a handle that must be released with
/// [`annuline_solution_free`].
///
/// # Safety
///
/// `config` must be a live handle from [`annuline_config_parse`] and `out`
/// a writable `AnnulineSolution*` slot; both must stay valid for the call.
#[no_mangle]
pub unsafe extern "C" fn annuline_solve(
    config: *const AnnulineConfig,
    out: *mut *mut AnnulineSolution,
) -> i32 {
    guarded(|| {
        if config.is_null() || out.is_null() {
            set_error("null pointer argument");
            return ANNULINE_ERR_NULL;
        }
        let config = unsafe { &(*config).inner };
        run_to_solution(
            config,
            |c| {
                let grid = c.grid()?;
                let geo = build_coefficients(&c.shape, &grid)?;
                let boundary = load_boundary(c, &grid)?;
                let (state, report) = solve(&boundary, &geo, &grid, &c.solver_config())?;
                Ok((state, report.j_final))
            },
            out,
        )
    })
}

/// Fits the per-line coefficient expansions by nonlinear least squares and
/// returns the fitted state. A fit that stops short of its target is a
/// numeric failure: `ANNULINE_ERR_NUMERIC` comes back and no handle is
/// produced.
///
/// # Safety
///
/// Same contract as [`annuline_solve`].
#[no_mangle]
pub unsafe extern "C" fn annuline_fit(
    config: *const AnnulineConfig,
    out: *mut *mut AnnulineSolution,
) -> i32 {
    guarded(|| {
        if config.is_null() || out.is_null() {
            set_error("null pointer argument");
            return ANNULINE_ERR_NULL;
        }
        let config = unsafe { &(*config).inner };
        run_to_solution(
            config,
            |c| {
                let grid = c.grid()?;
                let geo = build_coefficients(&c.shape, &grid)?;
                let boundary = load_boundary(c, &grid)?;
                let outcome = fit(&boundary, &geo, &grid, c.nu, &c.fit_options())?;
                Ok((outcome.state, outcome.report.j))
            },
            out,
        )
    })
}

/// Releases a solution handle. Passing null is a no-op.
///
/// # Safety
///
/// `solution` must be null or a handle obtained from [`annuline_solve`] or
/// [`annuline_fit`] that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn annuline_solution_free(solution: *mut AnnulineSolution) {
    if !solution.is_null() {
        drop(unsafe { Box::from_raw(solution) });
    }
}

/// Writes the grid dimensions: `*n_lines` = N (lines are indexed 0..=N) and
/// `*n_theta` = M angular nodes per line.
///
/// # Safety
///
/// `solution` must be a live solution handle; `n_lines` and `n_theta` must
/// point to writable `size_t` slots.
#[no_mangle]
pub unsafe extern "C" fn annuline_solution_dims(
    solution: *const AnnulineSolution,
    n_lines: *mut usize,
    n_theta: *mut usize,
) -> i32 {
    guarded(|| {
        if solution.is_null() || n_lines.is_null() || n_theta.is_null() {
            set_error("null pointer argument");
            return ANNULINE_ERR_NULL;
        }
        unsafe {
            *n_lines = (*solution).n_lines;
            *n_theta = (*solution).n_theta;
        }
        ANNULINE_OK
    })
}

/// Writes the residual functional J of the solution to `*j`.
///
/// # Safety
///
/// `solution` must be a live solution handle and `j` a writable `double`
/// slot.
#[no_mangle]
pub unsafe extern "C" fn annuline_solution_j(
    solution: *const AnnulineSolution,
    j: *mut f64,
) -> i32 {
    guarded(|| {
        if solution.is_null() || j.is_null() {
            set_error("null pointer argument");
            return ANNULINE_ERR_NULL;
        }
        unsafe { *j = (*solution).j };
        ANNULINE_OK
    })
}

/// Copies one line of one field into a caller buffer.
///
/// `field` is `ANNULINE_FIELD_U`, `ANNULINE_FIELD_V`, or
/// `ANNULINE_FIELD_P`; `line` ranges over 0..=N; `len` must equal the
/// `n_theta` reported by [`annuline_solution_dims`].
///
/// # Safety
///
/// `solution` must be a live solution handle and `buffer` must point to at
/// least `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn annuline_solution_field(
    solution: *const AnnulineSolution,
    field: i32,
    line: usize,
    buffer: *mut f64,
    len: usize,
) -> i32 {
    guarded(|| {
        if solution.is_null() || buffer.is_null() {
            set_error("null pointer argument");
            return ANNULINE_ERR_NULL;
        }
        let solution = unsafe { &*solution };
        if line > solution.n_lines {
            set_error("line index out of range");
            return ANNULINE_ERR_CONFIG;
        }
        if len != solution.n_theta {
            set_error("buffer length does not match n_theta");
            return ANNULINE_ERR_CONFIG;
        }
        let row = match field {
            ANNULINE_FIELD_U => solution.state.u.row(line),
            ANNULINE_FIELD_V => solution.state.v.row(line),
            ANNULINE_FIELD_P => match &solution.state.p {
                Some(p) => p.row(line),
                None => {
                    set_error("solution carries no pressure field");
                    return ANNULINE_ERR_CONFIG;
                }
            },
            _ => {
                set_error("unknown field selector");
                return ANNULINE_ERR_CONFIG;
            }
        };
        let dst = unsafe { std::slice::from_raw_parts_mut(buffer, len) };
        for (slot, &value) in dst.iter_mut().zip(row.iter()) {
            *slot = value;
        }
        ANNULINE_OK
    })
}
