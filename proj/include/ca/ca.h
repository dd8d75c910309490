#ifndef CA_CA_H
#define CA_CA_H

#include <stddef.h>
#include <stdint.h>

#if defined(CA_BUILDING_LIBRARY)
#define CA_API __attribute__((visibility("default")))
#else
#define CA_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ca_status {
  CA_OK = 0,
  CA_ERR_IO = 1,
  CA_ERR_BAD_MAGIC = 2,
  CA_ERR_VERSION_MISMATCH = 3,
  CA_ERR_TRUNCATED_FILE = 4,
  CA_ERR_NON_FINITE_VALUE = 5,
  CA_ERR_BAD_IDS = 6,
  CA_ERR_BAD_JSON = 7,
  CA_ERR_MISSING_LABEL = 8,
  CA_ERR_DEGENERATE_INPUT = 9,
  CA_ERR_EMPTY_RANGE = 10,
  CA_ERR_DIM_TOO_LARGE = 11,
  CA_ERR_K_TOO_LARGE = 12,
  CA_ERR_K_TOO_LARGE_FOR_LEAVES = 13,
  CA_ERR_BAD_THRESHOLD = 14,
  CA_ERR_LENGTH_MISMATCH = 15,
  CA_ERR_NON_SQUARE = 16,
  CA_ERR_MISMATCHED_K = 17,
  CA_ERR_NO_RETAINED_SAMPLES = 18,
  CA_ERR_INVALID_ARGUMENT = 19,
  CA_ERR_INVALID_CONFIG = 20,
  CA_ERR_INTERNAL = 21,
} ca_status;

typedef struct ca_matrix ca_matrix;
typedef struct ca_pipeline ca_pipeline;
typedef struct ca_service ca_service;

CA_API const char* ca_version(void);
CA_API const char* ca_status_name(ca_status status);

/* Message and stage of the last failure on the calling thread ("" if none). */
CA_API const char* ca_last_error(void);
CA_API const char* ca_last_error_stage(void);

/* Strings returned through char** out-parameters are released with this. */
CA_API void ca_string_free(char* s);

/* ---- feature matrices (FMAT files) ---- */

CA_API ca_status ca_matrix_load(const char* path, ca_matrix** out);
CA_API ca_status ca_matrix_create(size_t rows, size_t cols, const float* data, const char* const* ids,
                                  ca_matrix** out);
CA_API ca_status ca_matrix_write(const ca_matrix* m, const char* path);
CA_API size_t ca_matrix_rows(const ca_matrix* m);
CA_API size_t ca_matrix_cols(const ca_matrix* m);
CA_API const float* ca_matrix_data(const ca_matrix* m);
CA_API const char* ca_matrix_id(const ca_matrix* m, size_t row);
CA_API void ca_matrix_free(ca_matrix* m);

/* ---- pipeline stages ----
 * The config is a JSON document; NULL or "" selects all defaults. Every
 * stage writes its artifacts under output_dir and returns a JSON summary. */

CA_API ca_status ca_pipeline_create(const char* config_json, ca_pipeline** out);
CA_API ca_status ca_pipeline_config(const ca_pipeline* p, char** config_json);
CA_API ca_status ca_pipeline_blobs(ca_pipeline* p, char** result_json);
CA_API ca_status ca_pipeline_reduce(ca_pipeline* p, char** result_json);
CA_API ca_status ca_pipeline_cluster(ca_pipeline* p, char** result_json);
CA_API ca_status ca_pipeline_vote(ca_pipeline* p, char** result_json);
CA_API ca_status ca_pipeline_evaluate(ca_pipeline* p, char** result_json);
CA_API ca_status ca_pipeline_annotate(ca_pipeline* p, char** result_json);
CA_API ca_status ca_pipeline_finalize(ca_pipeline* p, char** result_json);
CA_API ca_status ca_pipeline_compare(ca_pipeline* p, char** result_json);
CA_API ca_status ca_pipeline_sweep(ca_pipeline* p, char** result_json);
CA_API ca_status ca_pipeline_run(ca_pipeline* p, char** result_json);
/* Human-readable report of the last evaluate/compare/sweep/run. */
CA_API ca_status ca_pipeline_summary(const ca_pipeline* p, char** text);
CA_API void ca_pipeline_free(ca_pipeline* p);

/* ---- annotation service ----
 * Loads embedding, consensus and manifest from the configured output
 * directory (and label_map.json when present). */

CA_API ca_status ca_service_create(const char* config_json, ca_service** out);
/* port 0 picks a free port; the bound port is written to *bound_port. */
CA_API ca_status ca_service_bind(ca_service* s, const char* host, int port, int* bound_port);
/* Blocks until ca_service_stop is called from another thread. */
CA_API ca_status ca_service_listen(ca_service* s);
CA_API void ca_service_wait_until_ready(ca_service* s);
CA_API void ca_service_stop(ca_service* s);
CA_API void ca_service_free(ca_service* s);

#ifdef __cplusplus
}
#endif

#endif
