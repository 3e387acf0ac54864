#ifndef DCPAIR_H
#define DCPAIR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every API call.
typedef enum DcpairStatus {
  DCPAIR_STATUS_OK = 0,
  DCPAIR_STATUS_NULL_POINTER = 1,
  DCPAIR_STATUS_INVALID_UTF8 = 2,
  // Unknown family, case or command, bad parameters, inadmissible input.
  DCPAIR_STATUS_INVALID_INPUT = 3,
  DCPAIR_STATUS_DEGENERATE = 4,
  DCPAIR_STATUS_INCONSISTENT = 5,
  DCPAIR_STATUS_IO = 6,
  DCPAIR_STATUS_PANIC = 7,
} DcpairStatus;

// Opaque run configuration.
typedef struct DcpairConfig DcpairConfig;

// Opaque verification report.
typedef struct DcpairReport DcpairReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *dcpair_version(void);

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next API call on the same thread.
const char *dcpair_last_error(void);

// Releases a string returned by the library. NULL is ignored.
//
// # Safety
// `s` must come from this library and not be freed twice.
void dcpair_string_free(char *s);

// New configuration for `command`: pearson, structure, mops, coherence,
// sobolev or classify-table.
//
// # Safety
// `command` must be a NUL-terminated string and `out` a valid pointer.
enum DcpairStatus dcpair_config_new(const char *command, struct DcpairConfig **out);

// # Safety
// `cfg` must come from `dcpair_config_new` and not be freed twice.
void dcpair_config_free(struct DcpairConfig *cfg);

// # Safety
// `cfg` must be a live handle and `family` a NUL-terminated string.
enum DcpairStatus dcpair_config_set_family(struct DcpairConfig *cfg, const char *family);

// # Safety
// `cfg` must be a live handle and `case` a NUL-terminated string.
enum DcpairStatus dcpair_config_set_case(struct DcpairConfig *cfg, const char *case_);

// Sets parameter `name` to the rational `value` (`p` or `p/q`).
//
// # Safety
// `cfg` must be a live handle; `name` and `value` NUL-terminated strings.
enum DcpairStatus dcpair_config_set_param(struct DcpairConfig *cfg,
                                          const char *name,
                                          const char *value);

// # Safety
// `cfg` must be a live handle.
enum DcpairStatus dcpair_config_set_nmax(struct DcpairConfig *cfg, uint32_t nmax);

// # Safety
// `cfg` must be a live handle.
enum DcpairStatus dcpair_config_set_xmax(struct DcpairConfig *cfg, uint32_t xmax);

// Exact arithmetic.
//
// # Safety
// `cfg` must be a live handle.
enum DcpairStatus dcpair_config_set_exact(struct DcpairConfig *cfg);

// Ball arithmetic at `precision` bits (at least 64).
//
// # Safety
// `cfg` must be a live handle.
enum DcpairStatus dcpair_config_set_approx(struct DcpairConfig *cfg, uint32_t precision);

// Replaces the Sobolev weights with the given rationals.
//
// # Safety
// `cfg` must be a live handle and `values` an array of `len`
// NUL-terminated strings.
enum DcpairStatus dcpair_config_set_lambdas(struct DcpairConfig *cfg,
                                            const char *const *values,
                                            size_t len);

// Fixture file for the pair commands.
//
// # Safety
// `cfg` must be a live handle and `path` a NUL-terminated string.
enum DcpairStatus dcpair_config_set_fixtures(struct DcpairConfig *cfg, const char *path);

// Worker threads; 0 uses the default.
//
// # Safety
// `cfg` must be a live handle.
enum DcpairStatus dcpair_config_set_workers(struct DcpairConfig *cfg, uint32_t workers);

// Runs the configured checks. A report is produced whenever the input is
// valid, whether or not the checks pass.
//
// # Safety
// `cfg` must be a live handle and `out` a valid pointer.
enum DcpairStatus dcpair_run(const struct DcpairConfig *cfg, struct DcpairReport **out);

// # Safety
// `report` must come from `dcpair_run` and not be freed twice.
void dcpair_report_free(struct DcpairReport *report);

// Check counts of a report.
//
// # Safety
// `report` must be a live handle; the output pointers valid or NULL.
enum DcpairStatus dcpair_report_summary(const struct DcpairReport *report,
                                        uint64_t *passed,
                                        uint64_t *failed,
                                        uint64_t *inconclusive);

// 1 when every check passed, 0 otherwise, -1 for a NULL handle.
//
// # Safety
// `report` must be a live handle or NULL.
int32_t dcpair_report_all_passed(const struct DcpairReport *report);

// Report as JSON; free the result with `dcpair_string_free`.
//
// # Safety
// `report` must be a live handle and `out` a valid pointer.
enum DcpairStatus dcpair_report_json(const struct DcpairReport *report, char **out);

// Report as CSV (the classification table when present); free the result
// with `dcpair_string_free`.
//
// # Safety
// `report` must be a live handle and `out` a valid pointer.
enum DcpairStatus dcpair_report_csv(const struct DcpairReport *report, char **out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* DCPAIR_H */
