/* C interface to the annuline solver library. Generated; do not edit. */

#ifndef ANNULINE_H
#define ANNULINE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Success.
 */
#define ANNULINE_OK 0

/**
 * Numeric failure: no convergence, fit target missed, or a certification
 * defect.
 */
#define ANNULINE_ERR_NUMERIC 1

/**
 * Invalid configuration text, field value, or function argument.
 */
#define ANNULINE_ERR_CONFIG 2

/**
 * A required pointer argument was null.
 */
#define ANNULINE_ERR_NULL 3

/**
 * Internal panic caught at the language boundary.
 */
#define ANNULINE_ERR_PANIC 4

/**
 * Selects the horizontal velocity field in [`annuline_solution_field`].
 */
#define ANNULINE_FIELD_U 0

/**
 * Selects the vertical velocity field in [`annuline_solution_field`].
 */
#define ANNULINE_FIELD_V 1

/**
 * Selects the pressure field in [`annuline_solution_field`].
 */
#define ANNULINE_FIELD_P 2

/**
 * Parsed and validated run configuration (opaque).
 */
typedef struct AnnulineConfig AnnulineConfig;

/**
 * A computed flow state on the (N+1) × M node grid (opaque).
 */
typedef struct AnnulineSolution AnnulineSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns a pointer to a NUL-terminated description of the most recent
 * failure on the calling thread, or an empty string if none occurred. The
 * pointer stays valid until the next call into this library on the same
 * thread; copy the string if it must outlive that.
 */
const char *annuline_last_error(void);

/**
 * Parses a flat `key = value` configuration document.
 *
 * On `ANNULINE_OK`, `*out` receives a handle that must be released with
 * [`annuline_config_free`].
 *
 * # Safety
 *
 * `text` must point to a NUL-terminated UTF-8 string and `out` to a
 * writable `AnnulineConfig*` slot; both must stay valid for the call.
 */
int32_t annuline_config_parse(const char *text, struct AnnulineConfig **out);

/**
 * Releases a configuration handle. Passing null is a no-op.
 *
 * # Safety
 *
 * `config` must be null or a handle obtained from
 * [`annuline_config_parse`] that has not been freed yet.
 */
void annuline_config_free(struct AnnulineConfig *config);

/**
 * Relaxes the coupled line maps to a steady state.
 *
 * On `ANNULINE_OK`, `*out` receives a handle that must be released with
 * [`annuline_solution_free`].
 *
 * # Safety
 *
 * `config` must be a live handle from [`annuline_config_parse`] and `out`
 * a writable `AnnulineSolution*` slot; both must stay valid for the call.
 */
int32_t annuline_solve(const struct AnnulineConfig *config, struct AnnulineSolution **out);

/**
 * Fits the per-line coefficient expansions by nonlinear least squares and
 * returns the fitted state. A fit that stops short of its target is a
 * numeric failure: `ANNULINE_ERR_NUMERIC` comes back and no handle is
 * produced.
 *
 * # Safety
 *
 * Same contract as [`annuline_solve`].
 */
int32_t annuline_fit(const struct AnnulineConfig *config, struct AnnulineSolution **out);

/**
 * Releases a solution handle. Passing null is a no-op.
 *
 * # Safety
 *
 * `solution` must be null or a handle obtained from [`annuline_solve`] or
 * [`annuline_fit`] that has not been freed yet.
 */
void annuline_solution_free(struct AnnulineSolution *solution);

/**
 * Writes the grid dimensions: `*n_lines` = N (lines are indexed 0..=N) and
 * `*n_theta` = M angular nodes per line.
 *
 * # Safety
 *
 * `solution` must be a live solution handle; `n_lines` and `n_theta` must
 * point to writable `size_t` slots.
 */
int32_t annuline_solution_dims(const struct AnnulineSolution *solution,
                               size_t *n_lines,
                               size_t *n_theta);

/**
 * Writes the residual functional J of the solution to `*j`.
 *
 * # Safety
 *
 * `solution` must be a live solution handle and `j` a writable `double`
 * slot.
 */
int32_t annuline_solution_j(const struct AnnulineSolution *solution, double *j);

/**
 * Copies one line of one field into a caller buffer.
 *
 * `field` is `ANNULINE_FIELD_U`, `ANNULINE_FIELD_V`, or
 * `ANNULINE_FIELD_P`; `line` ranges over 0..=N; `len` must equal the
 * `n_theta` reported by [`annuline_solution_dims`].
 *
 * # Safety
 *
 * `solution` must be a live solution handle and `buffer` must point to at
 * least `len` writable doubles.
 */
int32_t annuline_solution_field(const struct AnnulineSolution *solution,
                                int32_t field,
                                size_t line,
                                double *buffer,
                                size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ANNULINE_H */
