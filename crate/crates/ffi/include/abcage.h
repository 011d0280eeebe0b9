#ifndef ABCAGE_H
#define ABCAGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AbcDegeneracy {
  ABC_DEGENERACY_DP2 = 0,
  ABC_DEGENERACY_EP2_FIRST = 1,
  ABC_DEGENERACY_EP2_SECOND = 2,
  ABC_DEGENERACY_EP4 = 3,
  ABC_DEGENERACY_EP2_N = 4,
  ABC_DEGENERACY_NON_FLAT = 5,
} AbcDegeneracy;

typedef enum AbcStatus {
  ABC_STATUS_OK = 0,
  ABC_STATUS_NULL_POINTER = 1,
  ABC_STATUS_INVALID_ARGUMENT = 2,
  ABC_STATUS_CONFIG = 3,
  ABC_STATUS_INCONSISTENT = 4,
  ABC_STATUS_INCONCLUSIVE = 5,
  ABC_STATUS_DEGENERATE_RESPONSE = 6,
  ABC_STATUS_NUMERICAL = 7,
  ABC_STATUS_IO = 8,
  ABC_STATUS_PANIC = 9,
} AbcStatus;

/**
 * Opaque model handle (ladder or N-chain).
 */
typedef struct AbcModel AbcModel;

/**
 * Opaque evolution trace handle.
 */
typedef struct AbcTrace AbcTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *abc_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *abc_version(void);

/**
 * Creates a ladder model.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum AbcStatus abc_model_ladder_new(double j,
                                    double t,
                                    double t1,
                                    double t2,
                                    double theta1,
                                    double theta2,
                                    double eta_a,
                                    double eta_b,
                                    struct AbcModel **out);

/**
 * Creates a model from a JSON document in the configuration schema
 * (without the `"lattice"` key).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum AbcStatus abc_model_from_json(const char *json, struct AbcModel **out);

/**
 * Releases a model; null is ignored.
 *
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void abc_model_free(struct AbcModel *model);

/**
 * Number of chains (2 for a ladder), or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t abc_model_n_chains(const struct AbcModel *model);

/**
 * The four Bloch eigenvalues at momentum `k` (ladder only, gauge-fixed
 * internally), written to `re[0..4]` and `im[0..4]`.
 *
 * # Safety
 * `re` and `im` must each point to 4 writable doubles.
 */
enum AbcStatus abc_bloch_eigenvalues(const struct AbcModel *model,
                                     double k,
                                     double *re,
                                     double *im);

/**
 * Degeneracy class. For N-chain models the real-space matrix on a periodic
 * lattice of `cells` cells is used; `degree` receives the minimal
 * polynomial degree (0 when not flat).
 *
 * # Safety
 * `kind` and `degree` must be writable.
 */
enum AbcStatus abc_classify(const struct AbcModel *model,
                            size_t cells,
                            enum AbcDegeneracy *kind,
                            size_t *degree);

/**
 * Gauge-invariant Wilson loop of a ladder model.
 *
 * # Safety
 * `re` and `im` must be writable.
 */
enum AbcStatus abc_wilson_loop(const struct AbcModel *model, double *re, double *im);

/**
 * Krylov local range of the default excitation at (`chain`, `cell`).
 *
 * # Safety
 * `out` must be writable.
 */
enum AbcStatus abc_local_range(const struct AbcModel *model,
                               size_t cells,
                               bool periodic,
                               size_t chain,
                               size_t cell,
                               size_t *out);

/**
 * Evolves the default excitation at (`chain`, `cell`) over `steps`
 * uniform time points on `[0, t_max]`.
 *
 * # Safety
 * `out` must be writable; the returned trace is freed with
 * [`abc_trace_free`].
 */
enum AbcStatus abc_evolve(const struct AbcModel *model,
                          size_t cells,
                          bool periodic,
                          size_t chain,
                          size_t cell,
                          double t_max,
                          size_t steps,
                          struct AbcTrace **out);

/**
 * Releases a trace; null is ignored.
 *
 * # Safety
 * `trace` must come from this library and not be used afterwards.
 */
void abc_trace_free(struct AbcTrace *trace);

/**
 * Number of time points and sites in a trace.
 *
 * # Safety
 * `n_times` and `n_sites` must be writable.
 */
enum AbcStatus abc_trace_shape(const struct AbcTrace *trace, size_t *n_times, size_t *n_sites);

/**
 * Copies the row-major `n_times × n_sites` intensity table into `buf`
 * (site index `cell·n_chains + chain − 1`).
 *
 * # Safety
 * `buf` must hold `len` writable doubles.
 */
enum AbcStatus abc_trace_intensities(const struct AbcTrace *trace, double *buf, size_t len);

/**
 * Whether every intensity farther than `radius` columns from the source
 * stays at or below `tol`.
 *
 * # Safety
 * `out` must be writable.
 */
enum AbcStatus abc_trace_confined(const struct AbcTrace *trace,
                                  size_t radius,
                                  double tol,
                                  bool *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ABCAGE_H */
