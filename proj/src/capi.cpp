#include "ca/ca.h"

#include <cstring>
#include <memory>
#include <string>

#include "ca/dataio.hpp"
#include "ca/error.hpp"
#include "ca/pipeline.hpp"
#include "ca/service.hpp"

struct ca_matrix {
  ca::FeatureMatrix m;
};

struct ca_pipeline {
  ca::Pipeline p;
};

struct ca_service {
  std::unique_ptr<ca::AnnotateService> service;
  std::unique_ptr<ca::HttpServer> server;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_stage;

ca_status to_status(ca::Errc code) { return static_cast<ca_status>(static_cast<int>(code)); }

template <typename F>
ca_status guard(F&& f) {
  g_error.clear();
  g_stage.clear();
  try {
    f();
    return CA_OK;
  } catch (const ca::StageError& e) {
    g_error = e.what();
    g_stage = e.stage();
    return to_status(e.code());
  } catch (const ca::Error& e) {
    g_error = e.what();
    return to_status(e.code());
  } catch (const nlohmann::json::exception& e) {
    g_error = e.what();
    return CA_ERR_BAD_JSON;
  } catch (const std::filesystem::filesystem_error& e) {
    g_error = e.what();
    return CA_ERR_IO;
  } catch (const std::exception& e) {
    g_error = e.what();
    return CA_ERR_INTERNAL;
  } catch (...) {
    g_error = "unknown exception";
    return CA_ERR_INTERNAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ca::PipelineConfig parse_config(const char* config_json) {
  if (!config_json || !*config_json) return ca::config_from_json(nlohmann::json::object());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(config_json);
  } catch (const nlohmann::json::exception& e) {
    ca::fail(ca::Errc::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  return ca::config_from_json(j);
}

void require(const void* p, const char* what) {
  if (!p) ca::fail(ca::Errc::InvalidArgument, std::string(what) + " is NULL");
}

using StageFn = nlohmann::json (ca::Pipeline::*)();

ca_status run_stage(ca_pipeline* p, char** result_json, StageFn fn) {
  return guard([&] {
    require(p, "pipeline");
    auto result = (p->p.*fn)();
    if (result_json) *result_json = dup_string(result.dump(2));
  });
}

}  // namespace

extern "C" {

CA_API const char* ca_version(void) { return "1.0.0"; }

CA_API const char* ca_status_name(ca_status status) {
  if (status == CA_OK) return "Ok";
  return ca::errc_name(static_cast<ca::Errc>(status)).data();
}

CA_API const char* ca_last_error(void) { return g_error.c_str(); }
CA_API const char* ca_last_error_stage(void) { return g_stage.c_str(); }

CA_API void ca_string_free(char* s) { std::free(s); }

CA_API ca_status ca_matrix_load(const char* path, ca_matrix** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new ca_matrix{ca::load_feature_matrix(path)};
  });
}

CA_API ca_status ca_matrix_create(size_t rows, size_t cols, const float* data, const char* const* ids,
                                  ca_matrix** out) {
  return guard([&] {
    require(out, "out");
    if (rows * cols > 0) require(data, "data");
    std::vector<ca::SampleId> row_ids;
    for (size_t i = 0; i < rows; ++i) row_ids.push_back(ids ? ids[i] : "s" + std::to_string(i));
    ca::FeatureMatrix m(rows, cols, std::move(row_ids));
    if (rows * cols > 0) std::memcpy(m.data.data(), data, rows * cols * sizeof(float));
    ca::validate_feature_matrix(m);
    *out = new ca_matrix{std::move(m)};
  });
}

CA_API ca_status ca_matrix_write(const ca_matrix* m, const char* path) {
  return guard([&] {
    require(m, "matrix");
    require(path, "path");
    ca::write_feature_matrix(m->m, path);
  });
}

CA_API size_t ca_matrix_rows(const ca_matrix* m) { return m ? m->m.rows : 0; }
CA_API size_t ca_matrix_cols(const ca_matrix* m) { return m ? m->m.cols : 0; }
CA_API const float* ca_matrix_data(const ca_matrix* m) { return m ? m->m.data.data() : nullptr; }

CA_API const char* ca_matrix_id(const ca_matrix* m, size_t row) {
  if (!m || row >= m->m.ids.size()) return nullptr;
  return m->m.ids[row].c_str();
}

CA_API void ca_matrix_free(ca_matrix* m) { delete m; }

CA_API ca_status ca_pipeline_create(const char* config_json, ca_pipeline** out) {
  return guard([&] {
    require(out, "out");
    *out = new ca_pipeline{ca::Pipeline(parse_config(config_json))};
  });
}

CA_API ca_status ca_pipeline_config(const ca_pipeline* p, char** config_json) {
  return guard([&] {
    require(p, "pipeline");
    require(config_json, "config_json");
    *config_json = dup_string(ca::config_to_json(p->p.config()).dump(2));
  });
}

CA_API ca_status ca_pipeline_blobs(ca_pipeline* p, char** r) { return run_stage(p, r, &ca::Pipeline::blobs); }
CA_API ca_status ca_pipeline_reduce(ca_pipeline* p, char** r) { return run_stage(p, r, &ca::Pipeline::reduce); }
CA_API ca_status ca_pipeline_cluster(ca_pipeline* p, char** r) { return run_stage(p, r, &ca::Pipeline::cluster); }
CA_API ca_status ca_pipeline_vote(ca_pipeline* p, char** r) { return run_stage(p, r, &ca::Pipeline::vote); }
CA_API ca_status ca_pipeline_evaluate(ca_pipeline* p, char** r) { return run_stage(p, r, &ca::Pipeline::evaluate); }
CA_API ca_status ca_pipeline_annotate(ca_pipeline* p, char** r) { return run_stage(p, r, &ca::Pipeline::annotate); }
CA_API ca_status ca_pipeline_finalize(ca_pipeline* p, char** r) { return run_stage(p, r, &ca::Pipeline::finalize); }
CA_API ca_status ca_pipeline_compare(ca_pipeline* p, char** r) { return run_stage(p, r, &ca::Pipeline::compare); }
CA_API ca_status ca_pipeline_sweep(ca_pipeline* p, char** r) { return run_stage(p, r, &ca::Pipeline::sweep); }
CA_API ca_status ca_pipeline_run(ca_pipeline* p, char** r) { return run_stage(p, r, &ca::Pipeline::run); }

CA_API ca_status ca_pipeline_summary(const ca_pipeline* p, char** text) {
  return guard([&] {
    require(p, "pipeline");
    require(text, "text");
    *text = dup_string(p->p.summary_text());
  });
}

CA_API void ca_pipeline_free(ca_pipeline* p) { delete p; }

CA_API ca_status ca_service_create(const char* config_json, ca_service** out) {
  return guard([&] {
    require(out, "out");
    const auto cfg = parse_config(config_json);
    const auto dir = cfg.output_dir;
    auto load = [&] {
      auto embedding = ca::load_feature_matrix(dir / ca::artifact::kEmbedding);
      auto consensus = ca::consensus_from_json(ca::read_json_file(dir / ca::artifact::kConsensus));
      auto manifest = ca::load_manifest(cfg.manifest);
      ca::check_manifest_matches(manifest, consensus.ids);
      std::optional<ca::LabelMap> labels;
      const auto label_path = cfg.label_map.value_or(dir / ca::artifact::kLabelMap);
      if (std::filesystem::exists(label_path)) labels = ca::load_label_map(label_path);
      ca::ServiceOptions options{dir, cfg.ui_dir, cfg.exemplars};
      return std::make_unique<ca::AnnotateService>(std::move(consensus), std::move(embedding), std::move(manifest),
                                                   std::move(options), std::move(labels));
    };
    std::unique_ptr<ca::AnnotateService> service;
    try {
      service = load();
    } catch (const ca::Error& e) {
      throw ca::StageError("dataio", e);
    }
    auto s = std::make_unique<ca_service>();
    s->service = std::move(service);
    s->server = std::make_unique<ca::HttpServer>(*s->service);
    *out = s.release();
  });
}

CA_API ca_status ca_service_bind(ca_service* s, const char* host, int port, int* bound_port) {
  return guard([&] {
    require(s, "service");
    const int p = s->server->bind(host ? host : "127.0.0.1", port);
    if (bound_port) *bound_port = p;
  });
}

CA_API ca_status ca_service_listen(ca_service* s) {
  return guard([&] {
    require(s, "service");
    if (!s->server->listen()) ca::fail(ca::Errc::Io, "server stopped with an error");
  });
}

CA_API void ca_service_wait_until_ready(ca_service* s) {
  if (s) s->server->wait_until_ready();
}

CA_API void ca_service_stop(ca_service* s) {
  if (s) s->server->stop();
}

CA_API void ca_service_free(ca_service* s) { delete s; }

}  // extern "C"
