#ifndef NLDIFF_H
#define NLDIFF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NldStatus {
  NLD_STATUS_OK = 0,
  NLD_STATUS_NULL_POINTER = 1,
  NLD_STATUS_INVALID_UTF8 = 2,
  // Malformed or inconsistent JSON configuration.
  NLD_STATUS_CONFIG = 3,
  NLD_STATUS_INVALID_ARGUMENT = 4,
  // Quadrature, linear solve, iteration or truncation failure.
  NLD_STATUS_NUMERICAL = 5,
  NLD_STATUS_IO = 6,
  // Caller buffer shorter than required.
  NLD_STATUS_BUFFER_TOO_SMALL = 7,
  NLD_STATUS_PANIC = 8,
} NldStatus;

// A computed solution. Opaque to C.
typedef struct NldSolution NldSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the next failing call.
const char *nld_last_error(void);

// Solves the problem described by an experiment config (JSON); `mode` and `output` are ignored.
//
// # Safety
// `config_json` must be a NUL-terminated string and `out` a valid pointer.
enum NldStatus nld_solution_from_config(const char *config_json, struct NldSolution **out);

// # Safety
// `sol` must come from [`nld_solution_from_config`] and not be used afterwards. Null is ignored.
void nld_solution_free(struct NldSolution *sol);

// Number of time steps `N`; rows are indexed `0..=N`. Returns 0 for null.
//
// # Safety
// `sol` must be null or a live handle.
size_t nld_solution_steps(const struct NldSolution *sol);

// Number of cells `Nx`; each row holds `Nx + 1` nodes. Returns 0 for null.
//
// # Safety
// `sol` must be null or a live handle.
size_t nld_solution_cells(const struct NldSolution *sol);

// Final `eps` of the continuation (0 for nondegenerate laws). NaN for null.
//
// # Safety
// `sol` must be null or a live handle.
double nld_solution_eps(const struct NldSolution *sol);

// `max |u|` over all space-time nodes. NaN for null.
//
// # Safety
// `sol` must be null or a live handle.
double nld_solution_sup(const struct NldSolution *sol);

// Copies `u` at time row `n` (all `Nx + 1` nodes) into `buf`.
//
// # Safety
// `buf` must be writable for `len` doubles.
enum NldStatus nld_solution_copy_u(const struct NldSolution *sol,
                                   size_t n,
                                   double *buf,
                                   size_t len);

// Copies `v = phi(u)` at time row `n` into `buf`.
//
// # Safety
// `buf` must be writable for `len` doubles.
enum NldStatus nld_solution_copy_v(const struct NldSolution *sol,
                                   size_t n,
                                   double *buf,
                                   size_t len);

// Solution as CSV with columns `n,t,i,x,u,v`. Free the string with [`nld_string_free`].
//
// # Safety
// `sol` must be a live handle and `out` a valid pointer.
enum NldStatus nld_solution_to_csv(const struct NldSolution *sol, char **out);

// Runs the verification suite for the config's problem, solver and suite options.
// The JSON report goes to `report_json` and the number of failed checks to `failed`.
//
// # Safety
// `config_json` must be NUL-terminated; `report_json` and `failed` must be valid pointers.
enum NldStatus nld_verify_suite(const char *config_json, char **report_json, size_t *failed);

// Cell averages of `k` (`side = 0`) or `l` (`side = 1`) for a kernel given as JSON,
// e.g. `{"family": "fractional", "alpha": 0.5}`, on `steps` cells of `(0, horizon)`.
//
// # Safety
// `kernel_json` must be NUL-terminated and `buf` writable for `len >= steps` doubles.
enum NldStatus nld_kernel_sample(const char *kernel_json,
                                 double horizon,
                                 size_t steps,
                                 int32_t side,
                                 double *buf,
                                 size_t len);

// `E_alpha(z)` for `alpha in (0, 1]` and `z <= 0`.
//
// # Safety
// `out` must be a valid pointer.
enum NldStatus nld_mittag_leffler(double alpha, double z, double *out);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void nld_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NLDIFF_H */
