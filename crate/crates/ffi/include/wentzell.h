#ifndef WENTZELL_H
#define WENTZELL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes.
 */
enum WzStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  WZ_STATUS_OK = 0,
  WZ_STATUS_NULL_POINTER = 1,
  WZ_STATUS_INVALID_UTF8 = 2,
  /**
   * Unreadable or malformed input.
   */
  WZ_STATUS_PARSE = 3,
  /**
   * Well-formed input that breaks a graph or boundary-data invariant.
   */
  WZ_STATUS_INVARIANT = 4,
  /**
   * Argument out of range.
   */
  WZ_STATUS_BAD_ARGUMENT = 5,
  WZ_STATUS_BUFFER_TOO_SMALL = 6,
  /**
   * Numerical failure such as a singular boundary system.
   */
  WZ_STATUS_NUMERICAL = 7,
  WZ_STATUS_PANIC = 8,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum WzStatus WzStatus;
#else
typedef int32_t WzStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * A graph with its Wentzell data.
 */
typedef struct WzGraph WzGraph;

/**
 * Result of a scenario comparison.
 */
typedef struct WzReport WzReport;

typedef struct WzSimConfig {
  uint64_t paths;
  uint64_t seed;
  double delta;
  double horizon;
  /**
   * 0 = exact vertex scheme, 1 = lattice.
   */
  int32_t scheme;
} WzSimConfig;

typedef struct WzEstimate {
  double mean;
  double se;
  uint64_t n;
} WzEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *wz_last_error(void);

/**
 * Default simulation settings.
 */
struct WzSimConfig wz_sim_config_default(void);

/**
 * Parse a graph file held in memory.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
WzStatus wz_graph_from_json(const char *json, struct WzGraph **out);

/**
 * Read a graph file from disk.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
WzStatus wz_graph_read(const char *path, struct WzGraph **out);

/**
 * Release a graph. Null is ignored.
 *
 * # Safety
 * `g` must come from this library and not be used afterwards.
 */
void wz_graph_free(struct WzGraph *g);

/**
 * Vertex and edge counts.
 *
 * # Safety
 * `g` must be a live handle; the out pointers must be valid.
 */
WzStatus wz_graph_counts(const struct WzGraph *g,
                         size_t *vertices,
                         size_t *external,
                         size_t *internal);

/**
 * Hex SHA-256 of the canonical graph file, written with its NUL into
 * `buf` (65 bytes).
 *
 * # Safety
 * `g` must be a live handle and `buf` valid for `len` bytes.
 */
WzStatus wz_graph_hash(const struct WzGraph *g, char *buf, size_t len);

/**
 * `R_λf` at `point` (`vertex` or `edge@x`). `f` is a function spec such as
 * `one`, `exp:0.5` or `vertex:1,0;2`.
 *
 * # Safety
 * `g` must be a live handle, the strings NUL-terminated, `out` valid.
 */
WzStatus wz_resolvent(const struct WzGraph *g,
                      double lambda,
                      const char *f,
                      const char *point,
                      double *out);

/**
 * `E[e^{−λH}; X(H) = v]` for every vertex v, from an interior point.
 * `out` holds one entry per vertex.
 *
 * # Safety
 * `g` must be a live handle, `point` NUL-terminated, `out` valid for `len`
 * doubles.
 */
WzStatus wz_hitting_transform(const struct WzGraph *g,
                              const char *point,
                              double lambda,
                              double *out,
                              size_t len);

/**
 * Monte Carlo version of [`wz_hitting_transform`].
 *
 * # Safety
 * As for [`wz_hitting_transform`]; `cfg` must be valid.
 */
WzStatus wz_mc_hitting_transform(const struct WzGraph *g,
                                 const char *point,
                                 double lambda,
                                 const struct WzSimConfig *cfg,
                                 struct WzEstimate *out,
                                 size_t len);

/**
 * Monte Carlo version of [`wz_resolvent`].
 *
 * # Safety
 * As for [`wz_resolvent`]; `cfg` must be valid.
 */
WzStatus wz_mc_resolvent(const struct WzGraph *g,
                         double lambda,
                         const char *f,
                         const char *point,
                         const struct WzSimConfig *cfg,
                         struct WzEstimate *out);

/**
 * Run a scenario (JSON text) against `g`. The scenario's own `graph` entry
 * is ignored.
 *
 * # Safety
 * `g` must be a live handle, `scenario` NUL-terminated, `out` valid.
 */
WzStatus wz_compare(const struct WzGraph *g, const char *scenario, struct WzReport **out);

/**
 * Row and failure counts of a report.
 *
 * # Safety
 * `r` must be a live report; the out pointers must be valid.
 */
WzStatus wz_report_counts(const struct WzReport *r, size_t *rows, size_t *failed);

/**
 * The report as CSV. The string lives as long as the report.
 *
 * # Safety
 * `r` must be a live report.
 */
const char *wz_report_csv(const struct WzReport *r);

/**
 * Release a report. Null is ignored.
 *
 * # Safety
 * `r` must come from this library and not be used afterwards.
 */
void wz_report_free(struct WzReport *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WENTZELL_H */
