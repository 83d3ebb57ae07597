#ifndef QCYCLE_H
#define QCYCLE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code of every fallible call.
 */
typedef enum QcStatus {
  QC_STATUS_OK = 0,
  QC_STATUS_NULL_POINTER = 1,
  QC_STATUS_INVALID_ARGUMENT = 2,
  QC_STATUS_INVALID_PARAMETER = 3,
  QC_STATUS_REQUIRES_STRONG_LIMIT = 4,
  QC_STATUS_CHECK_FAILED = 5,
  QC_STATUS_BUFFER_TOO_SMALL = 6,
  QC_STATUS_PANIC = 7,
} QcStatus;

/**
 * Composed one-cycle S-matrix on the truncated space.
 */
typedef struct QcCycle QcCycle;

/**
 * Cycle parameters.
 */
typedef struct QcParams QcParams;

/**
 * Precomputed multi-cycle propagator.
 */
typedef struct QcSimulation QcSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next call into the library on this thread.
 */
const char *qc_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qc_version(void);

/**
 * Default parameters (strong-limit pulses).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum QcStatus qc_params_new(struct QcParams **out);

/**
 * # Safety
 * `params` must come from [`qc_params_new`] or be NULL.
 */
void qc_params_free(struct QcParams *params);

/**
 * Sets one field from its text form, e.g. `("mu", "0.7")`,
 * `("tau_a", "none")` or `("pulse_mode", "finite")`.
 *
 * # Safety
 * `params` must be a live handle, `key` and `value` NUL-terminated strings.
 */
enum QcStatus qc_params_set(struct QcParams *params, const char *key, const char *value);

/**
 * Reads a numeric field. Unset pulse durations read as NaN.
 *
 * # Safety
 * `params` must be a live handle, `key` a NUL-terminated string and
 * `value` a valid pointer.
 */
enum QcStatus qc_params_get(const struct QcParams *params, const char *key, double *value);

/**
 * `ρ±` of the transfer operator on Fock index `n`.
 *
 * # Safety
 * `params` must be a live handle; `rho_plus` and `rho_minus` valid pointers.
 */
enum QcStatus qc_transfer_eigenvalues(const struct QcParams *params,
                                      size_t n,
                                      double *rho_plus,
                                      double *rho_minus);

/**
 * Composes the cycle S-matrix on the space holding every state with at
 * most `quanta_bound` quanta. Fails with `CheckFailed` when the product and
 * closed form disagree.
 *
 * # Safety
 * `params` must be a live handle and `out` a valid pointer.
 */
enum QcStatus qc_cycle_new(const struct QcParams *params,
                           size_t quanta_bound,
                           struct QcCycle **out);

/**
 * # Safety
 * `cycle` must come from [`qc_cycle_new`] or be NULL.
 */
void qc_cycle_free(struct QcCycle *cycle);

/**
 * Dimension of the full (truncated) space.
 *
 * # Safety
 * `cycle` must be a live handle or NULL (returns 0).
 */
size_t qc_cycle_dim(const struct QcCycle *cycle);

/**
 * Deviation between product and closed form, NaN when no closed form
 * applies (finite pulses).
 *
 * # Safety
 * `cycle` must be a live handle or NULL (returns NaN).
 */
double qc_cycle_path_deviation(const struct QcCycle *cycle);

/**
 * Full-space index of `|m, level, k⟩` (`level` 0, 1, 2 for g, e, f), or
 * `usize::MAX` when outside the cutoffs.
 *
 * # Safety
 * `cycle` must be a live handle or NULL.
 */
size_t qc_cycle_index(const struct QcCycle *cycle, size_t m, uint32_t level, size_t k);

/**
 * Copies the S-matrix column-major into `re` and `im`, each of length at
 * least `dim²`.
 *
 * # Safety
 * `cycle` must be a live handle; `re` and `im` must hold `len` doubles.
 */
enum QcStatus qc_cycle_matrix(const struct QcCycle *cycle, double *re, double *im, size_t len);

/**
 * Prepares a strong-limit simulation.
 *
 * # Safety
 * `params` must be a live handle and `out` a valid pointer.
 */
enum QcStatus qc_simulation_new(const struct QcParams *params,
                                size_t quanta_bound,
                                struct QcSimulation **out);

/**
 * # Safety
 * `sim` must come from [`qc_simulation_new`] or be NULL.
 */
void qc_simulation_free(struct QcSimulation *sim);

/**
 * Number of values per record written by [`qc_simulation_run`].
 */
size_t qc_record_width(void);

/**
 * Name of record column `i` as a static string, or NULL.
 */
const char *qc_record_column(size_t i);

/**
 * Runs `n_cycles` cycles from the initial state described by `initial`
 * (same syntax as the command line, e.g. `"1,e,0"`) and writes
 * `(n_cycles + 1) × qc_record_width()` values row by row.
 *
 * # Safety
 * `sim` must be a live handle, `initial` a NUL-terminated string and
 * `records` must hold `len` doubles.
 */
enum QcStatus qc_simulation_run(const struct QcSimulation *sim,
                                const char *initial,
                                size_t n_cycles,
                                double *records,
                                size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QCYCLE_H */
