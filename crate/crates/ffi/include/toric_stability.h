#ifndef TORIC_STABILITY_H
#define TORIC_STABILITY_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TsStatus {
  TS_STATUS_OK = 0,
  TS_STATUS_PARSE_ERROR = 1,
  TS_STATUS_DOMAIN_ERROR = 2,
  TS_STATUS_NULL_POINTER = 3,
  TS_STATUS_INVALID_ARGUMENT = 4,
} TsStatus;

typedef enum TsVerdict {
  TS_VERDICT_STABLE = 0,
  TS_VERDICT_BORDERLINE = 1,
  TS_VERDICT_UNSTABLE = 2,
} TsVerdict;

/**
 * A validated Delzant polytope.
 */
typedef struct TsPolytope TsPolytope;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The message of the last failed call on this thread, or `""`. The
 * pointer stays valid until the next call into this library on the thread.
 */
const char *ts_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void ts_string_free(char *s);

/**
 * Parses and validates a polytope in the `dim`/`facet` text format.
 *
 * # Safety
 * `text` must be a nul-terminated string and `out` a valid pointer.
 */
enum TsStatus ts_polytope_parse(const char *text, struct TsPolytope **out);

/**
 * # Safety
 * `p` must be null or a handle from this library, not yet freed.
 */
void ts_polytope_free(struct TsPolytope *p);

/**
 * # Safety
 * `p` must be a live handle and `out` a valid pointer.
 */
enum TsStatus ts_polytope_dim(const struct TsPolytope *p, size_t *out);

/**
 * # Safety
 * `p` must be a live handle and `out` a valid pointer.
 */
enum TsStatus ts_polytope_vertex_count(const struct TsPolytope *p, size_t *out);

/**
 * The polytope in the text format accepted by [`ts_polytope_parse`].
 *
 * # Safety
 * `p` must be a live handle and `out` a valid pointer.
 */
enum TsStatus ts_polytope_to_text(const struct TsPolytope *p, char **out);

/**
 * Cuts `vertex` off by a simplex of size `t`.
 *
 * # Safety
 * `p` must be a live handle, `t` a nul-terminated string and `out` a valid
 * pointer.
 */
enum TsStatus ts_polytope_chop(const struct TsPolytope *p,
                               size_t vertex,
                               const char *t,
                               struct TsPolytope **out);

/**
 * The Futaki invariant of the torus vector `u`, as a rational string.
 *
 * # Safety
 * `p` must be a live handle, `u` a nul-terminated string and `out` a valid
 * pointer.
 */
enum TsStatus ts_futaki(const struct TsPolytope *p, const char *u, char **out);

/**
 * The Futaki-Mabuchi inner product of `u` and `v`, as a rational string.
 *
 * # Safety
 * `p` must be a live handle, `u` and `v` nul-terminated strings and `out`
 * a valid pointer.
 */
enum TsStatus ts_inner_product(const struct TsPolytope *p,
                               const char *u,
                               const char *v,
                               char **out);

/**
 * Stability of the blowup at a point of the face cut out by `facets`
 * (`n_facets == 0` for the open orbit) at `eps`. `certificate` may be null;
 * otherwise it receives the minimum of the functional over the extreme
 * rays, or null when there is nothing to test.
 *
 * # Safety
 * `p` must be a live handle, `facets` valid for `n_facets` reads, `eps` a
 * nul-terminated string, `verdict` a valid pointer and `certificate` null
 * or valid.
 */
enum TsStatus ts_check_stability(const struct TsPolytope *p,
                                 const size_t *facets,
                                 size_t n_facets,
                                 const char *eps,
                                 enum TsVerdict *verdict,
                                 char **certificate);

/**
 * The JSON report of the `check` command for the open orbit over a
 * comma-separated `eps` grid.
 *
 * # Safety
 * `p` must be a live handle, `grid` a nul-terminated string and `out` a
 * valid pointer.
 */
enum TsStatus ts_report_check(const struct TsPolytope *p, const char *grid, char **out);

/**
 * The JSON report of the `solve-moment` command for a model in the
 * Hamiltonian-family text format.
 *
 * # Safety
 * `model` must be a nul-terminated string, `grid` valid for `n_grid`
 * reads and `out` a valid pointer.
 */
enum TsStatus ts_report_solve_moment(const char *model,
                                     const double *grid,
                                     size_t n_grid,
                                     size_t order,
                                     double tol,
                                     char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TORIC_STABILITY_H */
