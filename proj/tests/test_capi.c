#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "ca/ca.h"

static int failures = 0;

#define EXPECT(cond)                                                  \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

static char* config_for(const char* dir) {
  static const char* fmt =
      "{\"output_dir\":\"%s\",\"seed\":1,"
      "\"blobs\":{\"n_per_class\":[30,30],\"dim\":8,\"center_box\":8.0},"
      "\"umap\":{\"d_out\":3,\"epochs\":60},\"cluster\":{\"k_over\":4}}";
  size_t len = strlen(fmt) + strlen(dir) + 1;
  char* out = malloc(len);
  snprintf(out, len, fmt, dir);
  return out;
}

static void test_matrix(const char* dir) {
  const float data[6] = {1.0f, 2.0f, 3.0f, 4.0f, 5.0f, 6.0f};
  const char* ids[3] = {"a", "b", "c"};
  ca_matrix* m = NULL;
  EXPECT(ca_matrix_create(3, 2, data, ids, &m) == CA_OK);
  EXPECT(ca_matrix_rows(m) == 3);
  EXPECT(ca_matrix_cols(m) == 2);
  EXPECT(strcmp(ca_matrix_id(m, 2), "c") == 0);
  EXPECT(ca_matrix_id(m, 3) == NULL);

  char path[1024];
  snprintf(path, sizeof path, "%s/m.fmat", dir);
  EXPECT(ca_matrix_write(m, path) == CA_OK);
  ca_matrix* back = NULL;
  EXPECT(ca_matrix_load(path, &back) == CA_OK);
  EXPECT(back != NULL && memcmp(ca_matrix_data(back), data, sizeof data) == 0);
  ca_matrix_free(back);
  ca_matrix_free(m);

  const char* dup[3] = {"a", "a", "c"};
  m = NULL;
  EXPECT(ca_matrix_create(3, 2, data, dup, &m) == CA_ERR_BAD_IDS);
  EXPECT(m == NULL);
  EXPECT(strlen(ca_last_error()) > 0);

  snprintf(path, sizeof path, "%s/none.fmat", dir);
  EXPECT(ca_matrix_load(path, &back) == CA_ERR_IO);
  EXPECT(ca_matrix_load(NULL, &back) == CA_ERR_INVALID_ARGUMENT);
}

static void test_pipeline(const char* dir) {
  ca_pipeline* p = NULL;
  EXPECT(ca_pipeline_create("{\"nope\":1}", &p) == CA_ERR_INVALID_CONFIG);
  EXPECT(ca_pipeline_create("{", &p) == CA_ERR_INVALID_CONFIG);
  EXPECT(p == NULL);

  char* cfg = config_for(dir);
  EXPECT(ca_pipeline_create(cfg, &p) == CA_OK);
  free(cfg);

  char* result = NULL;
  EXPECT(ca_pipeline_reduce(p, &result) == CA_ERR_IO);
  EXPECT(strcmp(ca_last_error_stage(), "dataio") == 0);
  EXPECT(result == NULL);

  EXPECT(ca_pipeline_blobs(p, &result) == CA_OK);
  EXPECT(result != NULL && strstr(result, "\"n\": 60") != NULL);
  ca_string_free(result);

  EXPECT(ca_pipeline_run(p, &result) == CA_OK);
  ca_string_free(result);
  char* summary = NULL;
  EXPECT(ca_pipeline_summary(p, &summary) == CA_OK);
  EXPECT(summary != NULL && strstr(summary, "overall accuracy") != NULL);
  ca_string_free(summary);

  char* config = NULL;
  EXPECT(ca_pipeline_config(p, &config) == CA_OK);
  EXPECT(config != NULL && strstr(config, "\"k_over\": 4") != NULL);
  ca_string_free(config);
  ca_pipeline_free(p);
}

static void test_service(const char* dir) {
  char* cfg = config_for(dir);
  ca_service* s = NULL;
  EXPECT(ca_service_create(cfg, &s) == CA_OK);
  free(cfg);
  int port = -1;
  EXPECT(ca_service_bind(s, "127.0.0.1", 0, &port) == CA_OK);
  EXPECT(port > 0);
  ca_service_stop(s);
  ca_service_free(s);

  s = NULL;
  EXPECT(ca_service_create("{\"output_dir\":\"/nonexistent/ca\"}", &s) == CA_ERR_IO);
  EXPECT(s == NULL);
}

int main(int argc, char** argv) {
  if (argc < 2) {
    fprintf(stderr, "usage: test_capi <scratch-dir>\n");
    return 2;
  }
  EXPECT(strlen(ca_version()) > 0);
  EXPECT(strcmp(ca_status_name(CA_ERR_MISSING_LABEL), "MissingLabel") == 0);
  EXPECT(strcmp(ca_status_name(CA_OK), "Ok") == 0);
  test_matrix(argv[1]);
  test_pipeline(argv[1]);
  test_service(argv[1]);
  if (failures) {
    fprintf(stderr, "%d failure(s)\n", failures);
    return 1;
  }
  printf("capi ok\n");
  return 0;
}
