/* C interface to the tdgl spectral-Galerkin simulator. */

#ifndef TDGL_H
#define TDGL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum TdglStatus {
  TDGL_STATUS_OK = 0,
  // A required pointer was null.
  TDGL_STATUS_NULL_POINTER = 1,
  // Physical parameters violate the model's constraints.
  TDGL_STATUS_INVALID_PARAMS = 2,
  // Any other invalid input (sizes, domain, non-finite values).
  TDGL_STATUS_INVALID_ARGUMENT = 3,
  // The state left the guard ball or became non-finite.
  TDGL_STATUS_BLOW_UP = 4,
  TDGL_STATUS_IO = 5,
  // A configuration file could not be parsed or validated.
  TDGL_STATUS_CONFIG = 6,
  // An internal panic was caught.
  TDGL_STATUS_PANIC = 7,
} TdglStatus;

// Opaque simulator handle for a one-dimensional interval.
typedef struct TdglSimulator TdglSimulator;

// Model coefficients; `d = d_r + i d_i`.
typedef struct TdglParams {
  double u;
  double a;
  double b;
  double c;
  double m;
  double g;
  double nu;
  double mu;
  double gamma;
  double d_r;
  double d_i;
} TdglParams;

// Diagnostics of the current state, in the column order of the CSV series
// plus the energy rate `de1`.
typedef struct TdglDiagnostics {
  double t;
  double l2_v;
  double grad_v;
  double h2_v;
  double l4_v4;
  double l2_phi;
  double grad_phi;
  double hminus1_phi;
  double ups1;
  double ups2;
  double e1;
  double e2;
  double e3;
  double res_phi_l2;
  double res_phi_h1;
  double res_v_l2;
  double nvt;
  double nphit;
  double nvt_h1;
  double de1;
} TdglDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// The benchmark parameter set.
struct TdglParams tdgl_default_params(void);

// Creates a simulator on `(0, length)` with `modes` sine modes and a
// quadrature grid of `grid` intervals (`0` selects `4 * modes`). The state
// starts at zero with zero forcing.
//
// # Safety
// `params` must point to a valid `TdglParams`; `out` must be writable.
enum TdglStatus tdgl_simulator_new(const struct TdglParams *params,
                                   double length,
                                   size_t modes,
                                   size_t grid,
                                   struct TdglSimulator **out);

// Releases a simulator. Null is ignored.
//
// # Safety
// `sim` must come from [`tdgl_simulator_new`] and not be used afterwards.
void tdgl_simulator_free(struct TdglSimulator *sim);

// Number of retained modes, or 0 for a null handle.
//
// # Safety
// `sim` must be null or a live handle.
size_t tdgl_simulator_modes(const struct TdglSimulator *sim);

// Replaces the state with `len` coefficients per field at time `t`.
//
// # Safety
// `v` and `phi` must each hold `2 * len` doubles.
enum TdglStatus tdgl_simulator_set_state(struct TdglSimulator *sim,
                                         const double *v,
                                         const double *phi,
                                         size_t len,
                                         double t);

// Copies the current coefficients into `v` and `phi` (either may be null).
//
// # Safety
// Non-null `v` and `phi` must each have room for `2 * len` doubles.
enum TdglStatus tdgl_simulator_get_state(const struct TdglSimulator *sim,
                                         double *v,
                                         double *phi,
                                         size_t len);

// Replaces the state by seeded random data of joint `H¹` norm `radius`
// at time 0.
//
// # Safety
// `sim` must be a live handle.
enum TdglStatus tdgl_simulator_seed_state(struct TdglSimulator *sim, double radius, uint64_t seed);

// Sets time-independent forcing; a null array means zero.
//
// # Safety
// Non-null `f` and `h` must each hold `2 * len` doubles.
enum TdglStatus tdgl_simulator_set_forcing(struct TdglSimulator *sim,
                                           const double *f,
                                           const double *h,
                                           size_t len);

// Bound on `‖v‖_{H¹} + ‖φ‖_{H¹}` beyond which a step reports blow-up.
//
// # Safety
// `sim` must be a live handle.
enum TdglStatus tdgl_simulator_set_guard(struct TdglSimulator *sim, double guard);

// Advances the state by `horizon` with step `dt`, landing exactly on the
// end time. On failure the state is left unchanged.
//
// # Safety
// `sim` must be a live handle.
enum TdglStatus tdgl_simulator_advance(struct TdglSimulator *sim, double horizon, double dt);

// Writes the current time to `out`.
//
// # Safety
// `out` must be writable.
enum TdglStatus tdgl_simulator_time(const struct TdglSimulator *sim, double *out);

// Evaluates all diagnostics of the current state with unit weights.
//
// # Safety
// `out` must be writable.
enum TdglStatus tdgl_simulator_diagnostics(const struct TdglSimulator *sim,
                                           struct TdglDiagnostics *out);

// Runs a configuration file like `tdgl run` and writes its outputs to
// `out_dir` (null selects the configuration's own directory, then
// `TDGL_OUT_DIR`, then the working directory). `exit_code` receives 0 when
// every certificate passes, 1 when one fails, and 2 on error.
//
// # Safety
// `path` must be a NUL-terminated string; `out_dir` null or NUL-terminated;
// `exit_code` null or writable.
enum TdglStatus tdgl_run_config(const char *path, const char *out_dir, int32_t *exit_code);

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *tdgl_last_error(void);

// Library version as a static NUL-terminated string.
const char *tdgl_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TDGL_H */
