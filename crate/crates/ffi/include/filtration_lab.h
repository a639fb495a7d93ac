#ifndef FILTRATION_LAB_H
#define FILTRATION_LAB_H

/* Generated by the filtration-lab-ffi build script from src/lib.rs; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible entry point.
 */
enum FlStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  /**
   * The call succeeded.
   */
  FL_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  FL_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  FL_STATUS_INVALID_UTF8 = 2,
  /**
   * The configuration JSON or the requested format was rejected.
   */
  FL_STATUS_INVALID_CONFIG = 3,
  /**
   * The experiment name is not one of the known experiments.
   */
  FL_STATUS_UNKNOWN_EXPERIMENT = 4,
  /**
   * The experiment started but failed; see `fl_last_error`.
   */
  FL_STATUS_RUN_FAILED = 5,
  /**
   * The report could not be rendered in the requested format.
   */
  FL_STATUS_RENDER_FAILED = 6,
  /**
   * An internal panic was caught at the language boundary.
   */
  FL_STATUS_PANIC = 7,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum FlStatus FlStatus;
#else
typedef int32_t FlStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Opaque handle to a finished experiment report.
 *
 * Obtain one from `fl_report_run` or `fl_suite_run`, inspect it with
 * `fl_report_all_pass` / `fl_report_check_count` / `fl_report_render`,
 * and release it with `fl_report_free`.
 */
typedef struct FlReport FlReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Run one experiment and hand back an owned report handle.
 *
 * `experiment` is one of `decimate`, `cascade`, `cascade-collapsed`,
 * `tsirelson`, `entropy-suite`, `exchange-suite`. `config_json` may be
 * null (all defaults) or a JSON object with any of the keys `seed`,
 * `trials`, `depth`, `window`, `steps`, `field_moduli`, `prefix_cap`;
 * unset keys take experiment-specific defaults. On success `*out` owns a
 * report and must be released with `fl_report_free`.
 *
 * # Safety
 * `experiment` and `config_json` must be null or NUL-terminated strings;
 * `out` must point to writable storage for one pointer.
 */
FlStatus fl_report_run(const char *experiment, const char *config_json, struct FlReport **out);

/**
 * Run every experiment at its default scale under one seed and hand back
 * the combined suite report. Check names are prefixed with the experiment
 * name, e.g. `cascade/recursion-identity`. On success `*out` owns a report
 * and must be released with `fl_report_free`.
 *
 * # Safety
 * `out` must point to writable storage for one pointer.
 */
FlStatus fl_suite_run(uint64_t seed, struct FlReport **out);

/**
 * Render a report as text. `format` is `"json"` or `"csv"`; null selects
 * JSON. Identical report and format always produce byte-identical output.
 * On success `*out` owns a NUL-terminated string and must be released with
 * `fl_string_free`.
 *
 * # Safety
 * `report` must be null or a live handle from this library; `format` must
 * be null or a NUL-terminated string; `out` must point to writable storage
 * for one pointer.
 */
FlStatus fl_report_render(const struct FlReport *report, const char *format, char **out);

/**
 * True when every check in the report passed. A null report yields false.
 *
 * # Safety
 * `report` must be null or a live handle from this library.
 */
bool fl_report_all_pass(const struct FlReport *report);

/**
 * Number of checks in the report. A null report yields zero.
 *
 * # Safety
 * `report` must be null or a live handle from this library.
 */
uint64_t fl_report_check_count(const struct FlReport *report);

/**
 * Release a report handle. Null is accepted and ignored.
 *
 * # Safety
 * `report` must be null or a handle from this library not yet freed.
 */
void fl_report_free(struct FlReport *report);

/**
 * Release a string produced by this library. Null is accepted and ignored.
 *
 * # Safety
 * `text` must be null or a string from this library not yet freed.
 */
void fl_string_free(char *text);

/**
 * Message for the most recent failure on the calling thread, or null when
 * the most recent fallible call succeeded. The returned copy is owned by
 * the caller and must be released with `fl_string_free`.
 */
char *fl_last_error(void);

/**
 * Library version as a static NUL-terminated string. Do not free.
 */
const char *fl_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FILTRATION_LAB_H */
