#ifndef PHASEFIELD_AVI_H
#define PHASEFIELD_AVI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AviStatus {
  AVI_STATUS_OK = 0,
  AVI_STATUS_NULL_POINTER = 1,
  AVI_STATUS_INVALID_ARGUMENT = 2,
  AVI_STATUS_IO = 3,
  AVI_STATUS_CONFIG = 4,
  AVI_STATUS_MESH = 5,
  AVI_STATUS_SOLVER = 6,
  AVI_STATUS_PANIC = 7,
} AviStatus;

/**
 * Opaque simulation handle.
 */
typedef struct AviSimulation AviSimulation;

/**
 * Energies of the most recent nodal state (J per unit thickness).
 */
typedef struct AviEnergies {
  double t;
  double kinetic;
  double strain;
  double crack;
  double external_work;
  double free;
} AviEnergies;

/**
 * Per-element update counts so far.
 */
typedef struct AviUpdateStats {
  uint64_t min;
  uint64_t max;
  uint64_t median;
  uint64_t total;
  uint64_t synchronous_estimate;
} AviUpdateStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays valid
 * until the next failing call on the same thread.
 */
const char *avi_last_error_message(void);

/**
 * Builds a simulation from a TOML file; relative paths resolve against its directory.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AviStatus avi_simulation_from_config_file(const char *path, struct AviSimulation **out);

/**
 * Builds a simulation from TOML text; relative paths resolve against the working
 * directory.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AviStatus avi_simulation_from_config_str(const char *text, struct AviSimulation **out);

/**
 * Releases a handle; NULL is ignored.
 *
 * # Safety
 * `sim` must come from one of the constructors and not have been freed.
 */
void avi_simulation_free(struct AviSimulation *sim);

/**
 * Performs up to `max_updates` elemental updates; the number done goes to `performed`
 * (may be NULL).
 *
 * # Safety
 * `sim` must be a live handle; `performed` NULL or valid.
 */
enum AviStatus avi_simulation_step(struct AviSimulation *sim,
                                   uint64_t max_updates,
                                   uint64_t *performed);

/**
 * # Safety
 * `sim` must be a live handle and `out` valid.
 */
enum AviStatus avi_simulation_is_finished(const struct AviSimulation *sim, bool *out);

/**
 * Time of the last processed event.
 *
 * # Safety
 * `sim` must be a live handle and `out` valid.
 */
enum AviStatus avi_simulation_time(const struct AviSimulation *sim, double *out);

/**
 * # Safety
 * `sim` must be a live handle and `out` valid.
 */
enum AviStatus avi_simulation_energies(const struct AviSimulation *sim, struct AviEnergies *out);

/**
 * # Safety
 * `sim` must be a live handle and `out` valid.
 */
enum AviStatus avi_simulation_num_nodes(const struct AviSimulation *sim, size_t *out);

/**
 * # Safety
 * `sim` must be a live handle and `out` valid.
 */
enum AviStatus avi_simulation_num_elements(const struct AviSimulation *sim, size_t *out);

/**
 * Copies the nodal phase field into `buf` (`len >= num_nodes`).
 *
 * # Safety
 * `sim` must be a live handle and `buf` valid for `len` writes.
 */
enum AviStatus avi_simulation_copy_phase(const struct AviSimulation *sim, double *buf, size_t len);

/**
 * Copies the nodal displacements as `x0, y0, x1, y1, ...` into `buf`
 * (`len >= 2 * num_nodes`).
 *
 * # Safety
 * `sim` must be a live handle and `buf` valid for `len` writes.
 */
enum AviStatus avi_simulation_copy_displacement(const struct AviSimulation *sim,
                                                double *buf,
                                                size_t len);

/**
 * # Safety
 * `sim` must be a live handle and `out` valid.
 */
enum AviStatus avi_simulation_update_stats(const struct AviSimulation *sim,
                                           struct AviUpdateStats *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHASEFIELD_AVI_H */
