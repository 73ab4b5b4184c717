/*
 * lakeorg C API.
 *
 * Every function returning lakeorg_status reports failures through the
 * status code; lakeorg_last_error() then describes the most recent failure on
 * the calling thread. Handles are opaque and owned by the caller, who
 * releases them with the matching *_free function (NULL is accepted).
 */
#ifndef LAKEORG_H
#define LAKEORG_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LAKEORG_API __declspec(dllexport)
#else
#define LAKEORG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lakeorg_status {
  LAKEORG_OK = 0,
  LAKEORG_ERR_INVALID_ARGUMENT = 1,
  LAKEORG_ERR_PARSE = 2,
  LAKEORG_ERR_IO = 3,
  LAKEORG_ERR_DIMENSION_MISMATCH = 4,
  LAKEORG_ERR_UNDEFINED_SIMILARITY = 5,
  LAKEORG_ERR_VALIDATION = 6,
  LAKEORG_ERR_NOT_FOUND = 7,
  LAKEORG_ERR_INAPPLICABLE = 8,
  LAKEORG_ERR_INTERNAL = 9
} lakeorg_status;

typedef struct lakeorg_embeddings lakeorg_embeddings;
typedef struct lakeorg_lake lakeorg_lake;
typedef struct lakeorg_orgset lakeorg_orgset;
typedef struct lakeorg_report lakeorg_report;
typedef struct lakeorg_service lakeorg_service;

LAKEORG_API const char* lakeorg_version(void);
LAKEORG_API const char* lakeorg_last_error(void);
LAKEORG_API const char* lakeorg_status_name(lakeorg_status status);

/* --- embeddings ------------------------------------------------------------ */

typedef struct lakeorg_synth_config {
  size_t dim;
  size_t domains;
  size_t topics_per_domain;
  size_t words_per_topic;
  double domain_weight;
  double topic_weight;
  double word_noise;
  uint64_t seed;
} lakeorg_synth_config;

LAKEORG_API void lakeorg_synth_config_default(lakeorg_synth_config* cfg);
LAKEORG_API lakeorg_status lakeorg_embeddings_load(const char* path, lakeorg_embeddings** out);
LAKEORG_API lakeorg_status lakeorg_embeddings_synthesize(const lakeorg_synth_config* cfg,
                                                         lakeorg_embeddings** out);
LAKEORG_API lakeorg_status lakeorg_embeddings_save(const lakeorg_embeddings* store, const char* path);
LAKEORG_API size_t lakeorg_embeddings_size(const lakeorg_embeddings* store);
LAKEORG_API size_t lakeorg_embeddings_dim(const lakeorg_embeddings* store);
/* Tokens dropped at load time because their vector had zero norm. */
LAKEORG_API size_t lakeorg_embeddings_skipped(const lakeorg_embeddings* store);
LAKEORG_API void lakeorg_embeddings_free(lakeorg_embeddings* store);

/* --- benchmark generation ----------------------------------------------------- */

typedef struct lakeorg_bench_config {
  size_t n_tags;
  size_t n_tables;
  size_t min_values;
  size_t max_values;
  size_t min_attrs;
  size_t max_attrs;
  double zipf_exponent;
  double tag_min_separation;
  int extra_tag_per_attribute;
  uint64_t seed;
} lakeorg_bench_config;

LAKEORG_API void lakeorg_bench_config_default(lakeorg_bench_config* cfg);
/* Writes tables/, metadata.jsonl and ground_truth.csv under out_dir. */
LAKEORG_API lakeorg_status lakeorg_bench_generate(const lakeorg_embeddings* store,
                                                  const lakeorg_bench_config* cfg, const char* out_dir);

/* --- lakes ------------------------------------------------------------------------ */

LAKEORG_API lakeorg_status lakeorg_lake_ingest(const char* tables_dir, const char* metadata,
                                               const lakeorg_embeddings* store, double text_threshold,
                                               lakeorg_lake** out);
LAKEORG_API lakeorg_status lakeorg_lake_load(const char* path, lakeorg_lake** out);
LAKEORG_API lakeorg_status lakeorg_lake_save(const lakeorg_lake* lake, const char* path);
LAKEORG_API size_t lakeorg_lake_table_count(const lakeorg_lake* lake);
LAKEORG_API size_t lakeorg_lake_attribute_count(const lakeorg_lake* lake);
LAKEORG_API size_t lakeorg_lake_tag_count(const lakeorg_lake* lake);
/* Warnings collected while ingesting (skipped tables, dropped columns). */
LAKEORG_API size_t lakeorg_lake_warning_count(const lakeorg_lake* lake);
LAKEORG_API const char* lakeorg_lake_warning(const lakeorg_lake* lake, size_t i);
LAKEORG_API void lakeorg_lake_free(lakeorg_lake* lake);

/* --- organizations -------------------------------------------------------------- */

typedef struct lakeorg_search_config {
  double gamma;
  size_t max_iterations;
  size_t plateau_window;
  double plateau_epsilon;
  uint64_t seed;
  int use_representatives;
  double representative_fraction;
  size_t dimensions;
} lakeorg_search_config;

typedef enum lakeorg_baseline { LAKEORG_BASELINE_FLAT = 0, LAKEORG_BASELINE_CLUSTERING = 1 } lakeorg_baseline;

LAKEORG_API void lakeorg_search_config_default(lakeorg_search_config* cfg);
/* Overlays the fields present in a JSON config file onto cfg. */
LAKEORG_API lakeorg_status lakeorg_search_config_load(const char* path, lakeorg_search_config* cfg);

/* Local search from the agglomerative initial organization, one run per
 * dimension. */
LAKEORG_API lakeorg_status lakeorg_build(const lakeorg_lake* lake, const lakeorg_search_config* cfg,
                                         lakeorg_orgset** out);
LAKEORG_API lakeorg_status lakeorg_build_baseline(const lakeorg_lake* lake, lakeorg_baseline kind,
                                                  double gamma, lakeorg_orgset** out);
LAKEORG_API lakeorg_status lakeorg_orgset_load(const char* path, const lakeorg_lake* lake,
                                               lakeorg_orgset** out);
LAKEORG_API lakeorg_status lakeorg_orgset_save(const lakeorg_orgset* orgs, const char* path);
/* Newline-delimited JSON search trace; only orgsets produced by lakeorg_build
 * carry one. */
LAKEORG_API lakeorg_status lakeorg_orgset_save_trace(const lakeorg_orgset* orgs, const char* path);
/* Representatives used during the build, if any. */
LAKEORG_API lakeorg_status lakeorg_orgset_save_reps(const lakeorg_orgset* orgs, const char* path);
LAKEORG_API size_t lakeorg_orgset_dimensions(const lakeorg_orgset* orgs);
LAKEORG_API size_t lakeorg_orgset_state_count(const lakeorg_orgset* orgs, size_t dimension);
/* Number of invariant violations; the first one is available through
 * lakeorg_last_error when nonzero. */
LAKEORG_API size_t lakeorg_orgset_validate(const lakeorg_orgset* orgs);
LAKEORG_API void lakeorg_orgset_free(lakeorg_orgset* orgs);

/* --- evaluation ------------------------------------------------------------------- */

/* reps_fraction 0 evaluates exactly; otherwise attributes are represented by
 * ceil(fraction * n) medoids drawn with seed. */
LAKEORG_API lakeorg_status lakeorg_evaluate(const lakeorg_orgset* orgs, double theta,
                                            double reps_fraction, uint64_t seed, lakeorg_report** out);
LAKEORG_API double lakeorg_report_effectiveness(const lakeorg_report* report);
LAKEORG_API double lakeorg_report_mean_success(const lakeorg_report* report);
LAKEORG_API size_t lakeorg_report_table_count(const lakeorg_report* report);
/* Per-table values in report order; returns NULL past the end. */
LAKEORG_API const char* lakeorg_report_table_id(const lakeorg_report* report, size_t i);
LAKEORG_API double lakeorg_report_table_discovery(const lakeorg_report* report, size_t i);
LAKEORG_API double lakeorg_report_table_success(const lakeorg_report* report, size_t i);
/* CSV table_id,discovery_prob,success_prob */
LAKEORG_API lakeorg_status lakeorg_report_write_csv(const lakeorg_report* report, const char* path);
/* {effectiveness, mean_success, n_tables} */
LAKEORG_API lakeorg_status lakeorg_report_write_summary(const lakeorg_report* report, const char* path);
LAKEORG_API void lakeorg_report_free(lakeorg_report* report);

/* --- enrichment --------------------------------------------------------------------- */

typedef struct lakeorg_enrich_config {
  size_t min_positives;
  size_t neg_ratio;
  size_t folds;
  uint64_t seed;
} lakeorg_enrich_config;

LAKEORG_API void lakeorg_enrich_config_default(lakeorg_enrich_config* cfg);
/* Trains one classifier per eligible tag of source and transfers tags to
 * target. models_path and report_path are optional outputs (NULL skips). */
LAKEORG_API lakeorg_status lakeorg_enrich(const lakeorg_lake* source, const lakeorg_lake* target,
                                          const lakeorg_enrich_config* cfg, const char* models_path,
                                          const char* report_path, lakeorg_lake** out);

/* --- navigation service ------------------------------------------------------------- */

/* Starts the HTTP service on a background thread. port 0 picks a free port;
 * static_dir may be NULL. */
LAKEORG_API lakeorg_status lakeorg_service_start(const lakeorg_orgset* orgs, const char* host, int port,
                                                 const char* static_dir, lakeorg_service** out);
LAKEORG_API int lakeorg_service_port(const lakeorg_service* service);
/* Blocks until the service stops. */
LAKEORG_API void lakeorg_service_wait(lakeorg_service* service);
LAKEORG_API void lakeorg_service_stop(lakeorg_service* service);
LAKEORG_API void lakeorg_service_free(lakeorg_service* service);

#ifdef __cplusplus
}
#endif

#endif /* LAKEORG_H */
