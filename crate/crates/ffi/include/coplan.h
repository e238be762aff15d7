#ifndef COPLAN_H
#define COPLAN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CoplanStatus {
  COPLAN_STATUS_OK = 0,
  COPLAN_STATUS_NULL_ARGUMENT = 1,
  COPLAN_STATUS_INVALID_UTF8 = 2,
  COPLAN_STATUS_PARSE_ERROR = 3,
  COPLAN_STATUS_NOT_FOUND = 4,
  COPLAN_STATUS_RUN_ERROR = 5,
  COPLAN_STATUS_PANIC = 6,
} CoplanStatus;

typedef struct CoplanCatalog CoplanCatalog;

typedef struct CoplanModel CoplanModel;

typedef struct CoplanReport CoplanReport;

typedef struct CoplanScenario CoplanScenario;

typedef struct CoplanStore CoplanStore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library on the same thread.
 */
const char *coplan_last_error(void);

/**
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void coplan_string_free(char *s);

/**
 * # Safety
 * `source` must be a NUL-terminated string; `out` a writable pointer.
 */
enum CoplanStatus coplan_catalog_parse(const char *source, struct CoplanCatalog **out);

/**
 * Number of components, 0 for null.
 *
 * # Safety
 * `catalog` must be null or a live handle.
 */
size_t coplan_catalog_len(const struct CoplanCatalog *catalog);

/**
 * Meta description (JSON) of one component.
 *
 * # Safety
 * Handles must be live; `id` NUL-terminated; `out` writable.
 */
enum CoplanStatus coplan_catalog_export_meta(const struct CoplanCatalog *catalog,
                                             const char *id,
                                             char **out);

/**
 * # Safety
 * `catalog` must be null or a handle not yet freed.
 */
void coplan_catalog_free(struct CoplanCatalog *catalog);

/**
 * # Safety
 * `source` must be a NUL-terminated string; `out` a writable pointer.
 */
enum CoplanStatus coplan_model_parse(const char *source, struct CoplanModel **out);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void coplan_model_free(struct CoplanModel *model);

/**
 * Ranked candidates for `attribute` (`object.attribute`) under default
 * weights, one `score,component,variable,unit,topic,range,factor` line each.
 * `taxonomy` may be null.
 *
 * # Safety
 * Handles must be live; strings NUL-terminated; `out` writable.
 */
enum CoplanStatus coplan_recommend(const struct CoplanModel *model,
                                   const struct CoplanCatalog *catalog,
                                   const char *taxonomy,
                                   const char *attribute,
                                   char **out);

/**
 * # Safety
 * `source` NUL-terminated; `catalog` live; `out` writable.
 */
enum CoplanStatus coplan_scenario_parse(const char *source,
                                        const struct CoplanCatalog *catalog,
                                        struct CoplanScenario **out);

/**
 * The scenario in its text format.
 *
 * # Safety
 * `scenario` live; `out` writable.
 */
enum CoplanStatus coplan_scenario_to_text(const struct CoplanScenario *scenario, char **out);

/**
 * The scenario projected to N-Triples.
 *
 * # Safety
 * `scenario` live; `out` writable.
 */
enum CoplanStatus coplan_scenario_to_ntriples(const struct CoplanScenario *scenario, char **out);

/**
 * A copy of `scenario` with missing unit transforms inserted.
 *
 * # Safety
 * Handles live; `out` writable.
 */
enum CoplanStatus coplan_autofix(const struct CoplanScenario *scenario,
                                 const struct CoplanCatalog *catalog,
                                 struct CoplanScenario **out);

/**
 * # Safety
 * `scenario` must be null or a handle not yet freed.
 */
void coplan_scenario_free(struct CoplanScenario *scenario);

/**
 * Validates a scenario; `model` may be null (no coverage check).
 *
 * # Safety
 * Handles live or null where allowed; `out` writable.
 */
enum CoplanStatus coplan_validate(const struct CoplanScenario *scenario,
                                  const struct CoplanCatalog *catalog,
                                  const struct CoplanModel *model,
                                  struct CoplanReport **out);

/**
 * # Safety
 * `report` must be null or live.
 */
bool coplan_report_passed(const struct CoplanReport *report);

/**
 * # Safety
 * `report` must be null or live.
 */
size_t coplan_report_len(const struct CoplanReport *report);

/**
 * Finding `index` as `severity code location message`.
 *
 * # Safety
 * `report` live; `out` writable.
 */
enum CoplanStatus coplan_report_finding(const struct CoplanReport *report,
                                        size_t index,
                                        char **out);

/**
 * # Safety
 * `report` must be null or a handle not yet freed.
 */
void coplan_report_free(struct CoplanReport *report);

/**
 * Runs the scenario and returns the sample log as CSV. `model` and
 * `base_dir` may be null.
 *
 * # Safety
 * Handles live or null where allowed; strings NUL-terminated; `out` writable.
 */
enum CoplanStatus coplan_run(const struct CoplanScenario *scenario,
                             const struct CoplanCatalog *catalog,
                             const struct CoplanModel *model,
                             uint64_t duration_s,
                             const char *base_dir,
                             char **out_csv);

/**
 * # Safety
 * `source` NUL-terminated; `out` writable.
 */
enum CoplanStatus coplan_store_parse(const char *source, struct CoplanStore **out);

/**
 * # Safety
 * `store` must be null or live.
 */
size_t coplan_store_len(const struct CoplanStore *store);

/**
 * Canonical N-Triples text.
 *
 * # Safety
 * `store` live; `out` writable.
 */
enum CoplanStatus coplan_store_serialize(const struct CoplanStore *store, char **out);

/**
 * # Safety
 * `store` must be null or a handle not yet freed.
 */
void coplan_store_free(struct CoplanStore *store);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COPLAN_H */
