#ifndef SABF_H
#define SABF_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum SabfStatus {
  SABF_STATUS_OK = 0,
  SABF_STATUS_NULL_POINTER = 1,
  SABF_STATUS_INVALID_ARGUMENT = 2,
  SABF_STATUS_BUFFER_TOO_SMALL = 3,
  SABF_STATUS_CONFIG = 4,
  SABF_STATUS_INFEASIBLE = 5,
  SABF_STATUS_SOLVER = 6,
  SABF_STATUS_IO = 7,
  SABF_STATUS_NOT_FOUND = 8,
  SABF_STATUS_PANIC = 9,
} SabfStatus;

/**
 * Per-row outcome of an experiment report.
 */
typedef enum SabfRowStatus {
  SABF_ROW_STATUS_OK = 0,
  SABF_ROW_STATUS_INFEASIBLE = 1,
  SABF_ROW_STATUS_SOLVER_FAIL = 2,
} SabfRowStatus;

/**
 * A validated experiment configuration.
 */
typedef struct SabfConfig SabfConfig;

/**
 * The result of running an experiment.
 */
typedef struct SabfReport SabfReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code. Never null.
 */
const char *sabf_status_message(enum SabfStatus status);

/**
 * Copies the message of the last failure on this thread into `buf`.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes; `needed` must be null or writable.
 */
enum SabfStatus sabf_last_error(char *buf, size_t len, size_t *needed);

/**
 * Parses and validates a TOML experiment configuration.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` writable.
 */
enum SabfStatus sabf_config_parse(const char *toml, struct SabfConfig **out);

/**
 * Releases a configuration. Null is ignored.
 *
 * # Safety
 * `cfg` must come from `sabf_config_parse` and not be freed twice.
 */
void sabf_config_free(struct SabfConfig *cfg);

/**
 * Overrides the master seed.
 *
 * # Safety
 * `cfg` must be a live configuration handle.
 */
enum SabfStatus sabf_config_set_seed(struct SabfConfig *cfg, uint64_t seed);

/**
 * Overrides the number of trials per sweep point. The change is validated
 * and rejected if the experiment kind is single-shot.
 *
 * # Safety
 * `cfg` must be a live configuration handle.
 */
enum SabfStatus sabf_config_set_trials(struct SabfConfig *cfg, size_t trials);

/**
 * Copies the hex SHA-256 of the canonical configuration into `buf`.
 *
 * # Safety
 * `cfg` must be a live handle, `buf` null or valid for `len` bytes and
 * `needed` null or writable.
 */
enum SabfStatus sabf_config_hash(const struct SabfConfig *cfg,
                                 char *buf,
                                 size_t len,
                                 size_t *needed);

/**
 * Normalized positions in `[-1, 1]` of the layout the harness deploys for
 * `nodes` flight nodes under `cfg`.
 *
 * # Safety
 * `cfg` must be a live handle, `out` null or valid for `len` doubles and
 * `needed` null or writable.
 */
enum SabfStatus sabf_deploy(const struct SabfConfig *cfg,
                            size_t nodes,
                            double *out,
                            size_t len,
                            size_t *needed);

/**
 * The `k` Fekete points of `[-1, 1]` (Gauss-Lobatto nodes), ascending.
 *
 * # Safety
 * `out` must be null or valid for `len` doubles and `needed` null or writable.
 */
enum SabfStatus sabf_fekete_points(size_t k, double *out, size_t len, size_t *needed);

/**
 * Runs the configured experiment. Per-row solver failures do not fail the
 * call; inspect them with `sabf_report_row_status`.
 *
 * # Safety
 * `cfg` must be a live handle and `out` writable.
 */
enum SabfStatus sabf_run(const struct SabfConfig *cfg, struct SabfReport **out);

/**
 * Releases a report. Null is ignored.
 *
 * # Safety
 * `report` must come from `sabf_run` and not be freed twice.
 */
void sabf_report_free(struct SabfReport *report);

/**
 * Number of sweep rows; 0 for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t sabf_report_rows(const struct SabfReport *report);

/**
 * Outcome of row `row`.
 *
 * # Safety
 * `report` must be a live handle and `out` writable.
 */
enum SabfStatus sabf_report_row_status(const struct SabfReport *report,
                                       size_t row,
                                       enum SabfRowStatus *out);

/**
 * Sweep values of the rows.
 *
 * # Safety
 * `report` must be a live handle, `out` null or valid for `len` doubles and
 * `needed` null or writable.
 */
enum SabfStatus sabf_report_sweep(const struct SabfReport *report,
                                  double *out,
                                  size_t len,
                                  size_t *needed);

/**
 * Row means of the named metric in report units (dBm, dB or plain), as in
 * the report CSV column of the same name.
 *
 * # Safety
 * `report` must be a live handle, `metric` a NUL-terminated string, `out`
 * null or valid for `len` doubles and `needed` null or writable.
 */
enum SabfStatus sabf_report_means(const struct SabfReport *report,
                                  const char *metric,
                                  double *out,
                                  size_t len,
                                  size_t *needed);

/**
 * The report table as CSV text.
 *
 * # Safety
 * `report` must be a live handle, `buf` null or valid for `len` bytes and
 * `needed` null or writable.
 */
enum SabfStatus sabf_report_csv(const struct SabfReport *report,
                                char *buf,
                                size_t len,
                                size_t *needed);

/**
 * Writes the report, plot table and metadata files into `dir`, creating it if needed.
 *
 * # Safety
 * `report` must be a live handle and `dir` a NUL-terminated string.
 */
enum SabfStatus sabf_report_write(const struct SabfReport *report, const char *dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SABF_H */
