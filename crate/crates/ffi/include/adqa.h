#ifndef ADQA_H
#define ADQA_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AdqaStatus {
  ADQA_STATUS_OK = 0,
  ADQA_STATUS_NULL_POINTER = 1,
  ADQA_STATUS_INVALID_UTF8 = 2,
  ADQA_STATUS_INVALID_INPUT = 3,
  ADQA_STATUS_DOMAIN_ERROR = 4,
  ADQA_STATUS_PANIC = 5,
} AdqaStatus;

/**
 * Model provider connection.
 */
typedef struct AdqaGateway AdqaGateway;

/**
 * Loaded question store.
 */
typedef struct AdqaStore AdqaStore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *adqa_version(void);

/**
 * Message for the last failed call on this thread; empty after success.
 * Owned by the library.
 */
const char *adqa_last_error(void);

/**
 * # Safety
 * `s` must come from this library or be null.
 */
void adqa_string_free(char *s);

/**
 * Share of the dialogue-to-human CC gap closed by a method, in percent.
 *
 * # Safety
 * `out` must be a valid pointer to a double.
 */
enum AdqaStatus adqa_accuracy_ratio(double cc_method,
                                    double cc_dialog,
                                    double cc_human,
                                    double *out);

/**
 * CIDEr of `candidate` against `reference`, with document frequencies
 * from `corpus_json`, a JSON array of strings.
 *
 * # Safety
 * String arguments must be valid NUL-terminated strings; `out` a valid pointer.
 */
enum AdqaStatus adqa_cider(const char *candidate,
                           const char *reference,
                           const char *corpus_json,
                           double *out);

/**
 * Opens a gateway from TOML config text (empty for defaults, which use
 * the built-in mock provider).
 *
 * # Safety
 * `config_toml` must be a valid NUL-terminated string; `out` a valid pointer.
 */
enum AdqaStatus adqa_gateway_new(const char *config_toml, struct AdqaGateway **out);

/**
 * # Safety
 * `gw` must come from [`adqa_gateway_new`] or be null.
 */
void adqa_gateway_free(struct AdqaGateway *gw);

/**
 * Aligns two JSONL transcripts; writes the mapping as JSON to `out`.
 * Unlabelled lines are classified through the gateway first.
 *
 * # Safety
 * `gw` must be a live gateway handle; strings valid; `out` a valid pointer.
 */
enum AdqaStatus adqa_align(const struct AdqaGateway *gw,
                           const char *track1_jsonl,
                           const char *track2_jsonl,
                           char **out);

/**
 * # Safety
 * `dir` must be a valid NUL-terminated path; `out` a valid pointer.
 */
enum AdqaStatus adqa_store_open(const char *dir, struct AdqaStore **out);

/**
 * # Safety
 * `store` must come from [`adqa_store_open`] or be null.
 */
void adqa_store_free(struct AdqaStore *store);

/**
 * Scores a submission (JSON) on the private split; writes the report as
 * JSON to `out`.
 *
 * # Safety
 * Handles must be live; strings valid; `out` a valid pointer.
 */
enum AdqaStatus adqa_evaluate(const struct AdqaStore *store,
                              const struct AdqaGateway *gw,
                              const char *submission_json,
                              char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ADQA_H */
