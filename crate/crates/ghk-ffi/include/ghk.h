#ifndef GHK_H
#define GHK_H

/* Generated by cbindgen from the ghk-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes of every `ghk_*` call.
 */
typedef enum {
  GHK_STATUS_OK = 0,
  GHK_STATUS_NULL_POINTER = 1,
  GHK_STATUS_INVALID_ARGUMENT = 2,
  GHK_STATUS_DOMAIN_ERROR = 3,
  GHK_STATUS_BUDGET_EXCEEDED = 4,
  GHK_STATUS_IO_ERROR = 5,
  GHK_STATUS_PARSE_ERROR = 6,
  GHK_STATUS_INTERNAL_ERROR = 7,
} GhkStatus;

/**
 * Opaque handle to extremizer-family parameters.
 */
typedef struct GhkExtremizer GhkExtremizer;

/**
 * Opaque handle to a complex grid function.
 */
typedef struct GhkGrid GhkGrid;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. The pointer
 * stays valid until the next failing `ghk_*` call on the same thread.
 */
const char *ghk_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *ghk_version(void);

/**
 * Create a grid function from shape/spacing/origin arrays and interleaved
 * complex values (`2·value_count` doubles).
 *
 * # Safety
 * All array pointers must be valid for the lengths implied by `dim` and the
 * product of `shape`.
 */
GhkStatus ghk_grid_create(size_t dim,
                          const size_t *shape,
                          const double *spacing,
                          const double *origin,
                          const double *values_interleaved,
                          size_t value_count,
                          GhkGrid **out);

/**
 * Release a grid handle. Null is ignored.
 *
 * # Safety
 * `grid` must be a pointer returned by this library and not yet freed.
 */
void ghk_grid_free(GhkGrid *grid);

/**
 * Read a GHK1 file.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string; `out` a valid out-pointer.
 */
GhkStatus ghk_grid_read_ghk1(const char *path, GhkGrid **out);

/**
 * Write a grid to a GHK1 file.
 *
 * # Safety
 * `grid` must be a live handle, `path` a valid NUL-terminated string.
 */
GhkStatus ghk_grid_write_ghk1(const GhkGrid *grid, const char *path);

/**
 * Number of cells of the grid (0 for null).
 *
 * # Safety
 * `grid` must be null or a live handle.
 */
size_t ghk_grid_value_count(const GhkGrid *grid);

/**
 * Grid dimension (0 for null).
 *
 * # Safety
 * `grid` must be null or a live handle.
 */
size_t ghk_grid_dim(const GhkGrid *grid);

/**
 * Copy the interleaved complex values into `out` (`2·value_count` doubles).
 *
 * # Safety
 * `out` must hold at least `2·ghk_grid_value_count(grid)` doubles.
 */
GhkStatus ghk_grid_values(const GhkGrid *grid, double *out, size_t capacity);

/**
 * L^p norm with the midpoint cell quadrature.
 *
 * # Safety
 * `grid` must be a live handle and `out` a valid pointer.
 */
GhkStatus ghk_lp_norm(const GhkGrid *grid, double p, double *out);

/**
 * ‖f‖_{U²} via the zero-padded DFT.
 *
 * # Safety
 * `grid` must be a live handle and `out` a valid pointer.
 */
GhkStatus ghk_u2_norm(const GhkGrid *grid, double *out);

/**
 * ‖f‖_{U^k}; `budget` of 0 selects the default slice guard.
 *
 * # Safety
 * `grid` must be a live handle and `out` a valid pointer.
 */
GhkStatus ghk_uk_norm(const GhkGrid *grid, uint32_t k, uint64_t budget, double *out);

/**
 * Deficit 1 − ‖f‖_{U^k}/(A(k,n)·‖f‖_{p_k}).
 *
 * # Safety
 * `grid` must be a live handle and `out` a valid pointer.
 */
GhkStatus ghk_deficit(const GhkGrid *grid, uint32_t k, uint64_t budget, double *out);

/**
 * Gowers inner product of `2^k` grids (bitmask slot order, conjugation on
 * odd-parity slots).
 *
 * # Safety
 * `grids` must point to `count` live handles; out-pointers must be valid.
 */
GhkStatus ghk_gowers_inner(const GhkGrid *const *grids,
                           size_t count,
                           uint32_t k,
                           uint64_t budget,
                           double *out_re,
                           double *out_im);

/**
 * Symmetric decreasing rearrangement of |f| as a new handle.
 *
 * # Safety
 * `grid` must be a live handle and `out` a valid out-pointer.
 */
GhkStatus ghk_rearrange(const GhkGrid *grid, GhkGrid **out);

/**
 * The standard isotropic extremizer member (amplitude 1, M = I, P = 0).
 *
 * # Safety
 * `out` must be a valid out-pointer.
 */
GhkStatus ghk_extremizer_standard(uint32_t k, uint32_t n, GhkExtremizer **out);

/**
 * Parse extremizer parameters from their flat JSON form.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string, `out` a valid out-pointer.
 */
GhkStatus ghk_extremizer_from_json(const char *json, GhkExtremizer **out);

/**
 * Serialize extremizer parameters to JSON; free with [`ghk_string_free`].
 *
 * # Safety
 * `params` must be a live handle and `out` a valid out-pointer.
 */
GhkStatus ghk_extremizer_to_json(const GhkExtremizer *params, char **out);

/**
 * Release an extremizer handle. Null is ignored.
 *
 * # Safety
 * `params` must be a pointer returned by this library and not yet freed.
 */
void ghk_extremizer_free(GhkExtremizer *params);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from a `ghk_*` call and not yet be freed.
 */
void ghk_string_free(char *s);

/**
 * Sample the extremizer on a uniform grid: `cells`, `lo`, `hi` hold one
 * entry per axis.
 *
 * # Safety
 * Array pointers must be valid for `dim` entries; handles must be live.
 */
GhkStatus ghk_synthesize(const GhkExtremizer *params,
                         size_t dim,
                         const size_t *cells,
                         const double *lo,
                         const double *hi,
                         GhkGrid **out);

/**
 * Project a grid function onto the extremizer family. Returns the fitted
 * parameters and the realized relative distance epsilon.
 *
 * # Safety
 * `grid` must be a live handle; out-pointers must be valid.
 */
GhkStatus ghk_fit(const GhkGrid *grid,
                  uint32_t k,
                  uint32_t restarts,
                  uint64_t seed,
                  GhkExtremizer **out_params,
                  double *out_epsilon);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GHK_H */
