#ifndef OAFORGE_H
#define OAFORGE_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OafStatus {
  OAF_STATUS_OK = 0,
  OAF_STATUS_NULL_POINTER = 1,
  OAF_STATUS_INVALID_ARGUMENT = 2,
  OAF_STATUS_INFEASIBLE = 3,
  OAF_STATUS_INTERNAL = 4,
} OafStatus;

/**
 * Opaque design handle.
 */
typedef struct OafDesign OafDesign;

/**
 * Exact rational `num / den` with `den > 0`.
 */
typedef struct OafRational {
  int64_t num;
  int64_t den;
} OafRational;

typedef struct OafMetrics {
  uint32_t k_min;
  struct OafRational k_ave;
  struct OafRational k_m2;
  struct OafRational c1;
  struct OafRational c2;
  struct OafRational tr_m2;
  /**
   * Composite objective; meaningful only when `has_phi` is nonzero.
   */
  double phi;
  int32_t has_phi;
  /**
   * Nonzero when the design is a foldover design.
   */
  int32_t foldover;
} OafMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL if none. The pointer
 * stays valid until the next failing call on this thread.
 */
const char *oaf_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *oaf_version(void);

/**
 * Kendall tau distance between two permutations of `0..m`.
 *
 * # Safety
 * `x` and `y` must each point to `m` readable bytes and `out` must be a
 * valid pointer to a `uint32_t`.
 */
enum OafStatus oaf_kendall_distance(const uint8_t *x, const uint8_t *y, size_t m, uint32_t *out);

/**
 * Builds a design from `n` rows of `m` labels stored row by row.
 *
 * # Safety
 * `rows` must point to `n * m` readable bytes and `out` must be a valid
 * pointer to a handle slot.
 */
enum OafStatus oaf_design_from_rows(const uint8_t *rows,
                                    size_t n,
                                    size_t m,
                                    struct OafDesign **out);

/**
 * Foldover simulated annealing with the default schedule.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum OafStatus oaf_construct_fsa_kd(size_t m,
                                    size_t n,
                                    uint64_t seed,
                                    double lambda,
                                    struct OafDesign **out);

/**
 * `n` distinct permutations drawn uniformly at random.
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum OafStatus oaf_construct_srs(size_t m, size_t n, uint64_t seed, struct OafDesign **out);

/**
 * Number of runs, or 0 for NULL.
 *
 * # Safety
 * `design` must be NULL or a live handle.
 */
size_t oaf_design_n(const struct OafDesign *design);

/**
 * Number of components, or 0 for NULL.
 *
 * # Safety
 * `design` must be NULL or a live handle.
 */
size_t oaf_design_m(const struct OafDesign *design);

/**
 * Copies the `n * m` labels row by row into `buf` of capacity `len`.
 *
 * # Safety
 * `design` must be a live handle and `buf` must point to `len` writable
 * bytes.
 */
enum OafStatus oaf_design_rows(const struct OafDesign *design, uint8_t *buf, size_t len);

/**
 * Evaluates every criterion of `design`.
 *
 * # Safety
 * `design` must be a live handle and `out` a valid pointer.
 */
enum OafStatus oaf_evaluate(const struct OafDesign *design, double lambda, struct OafMetrics *out);

/**
 * Releases a handle; NULL is ignored.
 *
 * # Safety
 * `design` must be NULL or a handle not yet freed.
 */
void oaf_design_free(struct OafDesign *design);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OAFORGE_H */
