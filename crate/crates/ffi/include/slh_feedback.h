#ifndef SLH_FEEDBACK_H
#define SLH_FEEDBACK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SlhFormat {
  SLH_FORMAT_CSV = 0,
  SLH_FORMAT_JSON = 1,
} SlhFormat;

typedef enum SlhStatus {
  SLH_STATUS_OK = 0,
  SLH_STATUS_NULL_POINTER = 1,
  SLH_STATUS_INVALID_UTF8 = 2,
  SLH_STATUS_PARSE = 3,
  SLH_STATUS_PHYSICS = 4,
  SLH_STATUS_NUMERICAL = 5,
  SLH_STATUS_IO = 6,
  SLH_STATUS_OUT_OF_RANGE = 7,
  SLH_STATUS_PANIC = 8,
} SlhStatus;

/**
 * Parsed netlist.
 */
typedef struct SlhNetlist SlhNetlist;

/**
 * Result of running a netlist.
 */
typedef struct SlhReport SlhReport;

/**
 * Amplifier parameters in internal units (rad/µs).
 */
typedef struct SlhAmplifier {
  double r0;
  double gain;
  double n_bath;
  double m_bath;
} SlhAmplifier;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *slh_version(void);

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *slh_last_error(void);

/**
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SlhStatus slh_netlist_parse(const char *text_ptr, struct SlhNetlist **out_ptr);

/**
 * # Safety
 * `nl` must come from [`slh_netlist_parse`] or be null.
 */
void slh_netlist_free(struct SlhNetlist *nl);

/**
 * Replaces the truncation of mode `label`.
 *
 * # Safety
 * `nl` must be a live handle and `label` a NUL-terminated string.
 */
enum SlhStatus slh_netlist_set_truncation(struct SlhNetlist *nl, const char *label, size_t dim);

/**
 * Replaces parameter `name` with `value` in its declared unit.
 *
 * # Safety
 * `nl` must be a live handle and `name` a NUL-terminated string.
 */
enum SlhStatus slh_netlist_set_param(struct SlhNetlist *nl, const char *name, double value);

/**
 * Runs the netlist's task. `out_dir` may be null, in which case nothing is
 * written to disk.
 *
 * # Safety
 * `nl` must be a live handle, `out_dir` null or a NUL-terminated string and
 * `report` a valid pointer.
 */
enum SlhStatus slh_netlist_run(const struct SlhNetlist *nl,
                               const char *out_dir,
                               enum SlhFormat format,
                               struct SlhReport **report);

/**
 * # Safety
 * `r` must come from [`slh_netlist_run`] or be null.
 */
void slh_report_free(struct SlhReport *r);

/**
 * Human-readable summary; null if `r` is null.
 *
 * # Safety
 * `r` must be a live handle or null.
 */
const char *slh_report_summary(const struct SlhReport *r);

/**
 * # Safety
 * `r` must be a live handle or null.
 */
size_t slh_report_table_count(const struct SlhReport *r);

/**
 * Row and column counts of table `table`.
 *
 * # Safety
 * `r` must be a live handle; `rows` and `cols` valid pointers.
 */
enum SlhStatus slh_report_table_shape(const struct SlhReport *r,
                                      size_t table,
                                      size_t *rows,
                                      size_t *cols);

/**
 * Numeric cell value; text cells are reported as NaN.
 *
 * # Safety
 * `r` must be a live handle and `value` a valid pointer.
 */
enum SlhStatus slh_report_table_value(const struct SlhReport *r,
                                      size_t table,
                                      size_t row,
                                      size_t col,
                                      double *value);

/**
 * Amplifier from pump rate `kappa` and squeezing rate `xi` (rad/µs).
 *
 * # Safety
 * `amp` must be a valid pointer.
 */
enum SlhStatus slh_amplifier_from_kappa_xi(double kappa, double xi, struct SlhAmplifier *amp);

/**
 * Kerr frequency shift and strength (rad/µs) from gain, coupling rate and
 * drive amplitude.
 *
 * # Safety
 * `delta` and `chi` must be valid pointers.
 */
enum SlhStatus slh_kerr_coefficients(double g0,
                                     double gamma_a,
                                     double a_t,
                                     double *delta,
                                     double *chi);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SLH_FEEDBACK_H */
