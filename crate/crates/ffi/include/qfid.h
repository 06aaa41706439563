#ifndef QFID_H
#define QFID_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QfidStatus {
  QFID_STATUS_OK = 0,
  QFID_STATUS_NULL_POINTER = 1,
  QFID_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Not Hermitian, not positive semidefinite, or wrong trace.
   */
  QFID_STATUS_INVALID_STATE = 3,
  QFID_STATUS_DIMENSION_MISMATCH = 4,
  QFID_STATUS_INVALID_CHANNEL = 5,
  QFID_STATUS_PANIC = 6,
} QfidStatus;

/**
 * Opaque Kraus channel.
 */
typedef struct QfidChannel QfidChannel;

/**
 * Opaque density matrix.
 */
typedef struct QfidState QfidState;

/**
 * Fidelity, Bures angle and trace distance with the bound flags.
 */
typedef struct QfidBounds {
  double fidelity;
  double bures_angle;
  double trace_distance;
  bool lower_bound_ok;
  bool upper_bound_ok;
} QfidBounds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * NUL-terminated library version; static storage.
 */
const char *qfid_version(void);

/**
 * Message for the last failed call on this thread, or NULL after a
 * success. Valid until the next `qfid_*` call on the same thread.
 */
const char *qfid_last_error_message(void);

/**
 * Builds a density matrix from row-major parts.
 *
 * # Safety
 * `re` (and `im` unless NULL) must point to `dim * dim` doubles; `out`
 * must be writable.
 */
enum QfidStatus qfid_state_new(size_t dim,
                               const double *re,
                               const double *im,
                               struct QfidState **out);

/**
 * Seeded random density matrix of the given rank.
 *
 * # Safety
 * `out` must be writable.
 */
enum QfidStatus qfid_state_random(size_t dim, size_t rank, uint64_t seed, struct QfidState **out);

/**
 * Dimension of a state, 0 for NULL.
 *
 * # Safety
 * `state` must be NULL or a live handle.
 */
size_t qfid_state_dim(const struct QfidState *state);

/**
 * Copies the state into row-major `re`/`im` arrays of `dim * dim`.
 *
 * # Safety
 * `state` must be a live handle; `re` and `im` must hold `dim * dim`
 * doubles each.
 */
enum QfidStatus qfid_state_entries(const struct QfidState *state, double *re, double *im);

/**
 * # Safety
 * `state` must be NULL or a handle not yet freed.
 */
void qfid_state_free(struct QfidState *state);

/**
 * `F(ρ, σ) = ‖√σ √ρ‖_Tr`.
 *
 * # Safety
 * `rho` and `sigma` must be live handles; `out` must be writable.
 */
enum QfidStatus qfid_fidelity(const struct QfidState *rho,
                              const struct QfidState *sigma,
                              double *out);

/**
 * `arccos F(ρ, σ)`.
 *
 * # Safety
 * As for [`qfid_fidelity`].
 */
enum QfidStatus qfid_bures_angle(const struct QfidState *rho,
                                 const struct QfidState *sigma,
                                 double *out);

/**
 * `½‖ρ − σ‖₁`.
 *
 * # Safety
 * As for [`qfid_fidelity`].
 */
enum QfidStatus qfid_trace_distance(const struct QfidState *rho,
                                    const struct QfidState *sigma,
                                    double *out);

/**
 * # Safety
 * As for [`qfid_fidelity`].
 */
enum QfidStatus qfid_check_bounds(const struct QfidState *rho,
                                  const struct QfidState *sigma,
                                  struct QfidBounds *out);

/**
 * Channel from the registry: `identity`, `dephasing(p)`, `phase-flip(p)`,
 * `depolarizing(p)` or `amplitude-damping(g)`.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum QfidStatus qfid_channel_named(const char *name, size_t dim, struct QfidChannel **out);

/**
 * Channel from `count` Kraus operators stored back to back, each
 * `dim * dim` row-major.
 *
 * # Safety
 * `re` (and `im` unless NULL) must point to `count * dim * dim` doubles;
 * `out` must be writable.
 */
enum QfidStatus qfid_channel_new(size_t dim,
                                 size_t count,
                                 const double *re,
                                 const double *im,
                                 struct QfidChannel **out);

/**
 * # Safety
 * `channel` must be NULL or a handle not yet freed.
 */
void qfid_channel_free(struct QfidChannel *channel);

/**
 * `Σ_i |Tr(E_i ρ)|²`.
 *
 * # Safety
 * `rho` and `channel` must be live handles; `out` must be writable.
 */
enum QfidStatus qfid_entanglement_fidelity(const struct QfidState *rho,
                                           const struct QfidChannel *channel,
                                           double *out);

/**
 * `E(ρ)` as a new state handle.
 *
 * # Safety
 * `channel` and `rho` must be live handles; `out` must be writable.
 */
enum QfidStatus qfid_channel_apply(const struct QfidChannel *channel,
                                   const struct QfidState *rho,
                                   struct QfidState **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QFID_H */
