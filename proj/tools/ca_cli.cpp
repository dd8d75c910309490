#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ca/ca.h"

using nlohmann::json;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::string> out;
  std::optional<std::string> features;
  std::optional<std::string> manifest;
  std::optional<std::string> label_map;
  std::optional<std::size_t> k_over;
  std::optional<std::size_t> dims;
  std::optional<std::size_t> neighbors;
  std::optional<std::size_t> epochs;
  bool no_pca = false;
  std::optional<std::string> reference;
  std::optional<std::string> alignment;
  std::optional<std::vector<std::string>> methods;
  std::optional<double> birch_threshold;
  std::optional<std::vector<std::size_t>> sweep_counts;
  std::optional<std::vector<std::size_t>> sweep_dims;
  std::optional<double> noise;
  std::optional<double> sigma;
  std::optional<std::string> host;
  std::optional<int> port;
  std::optional<std::string> ui_dir;
  bool debug_graph = false;
  bool quiet = false;
};

int report_failure(ca_status st) {
  const std::string stage = ca_last_error_stage();
  std::cerr << "error";
  if (!stage.empty()) std::cerr << " [" << stage << "]";
  std::cerr << " " << ca_status_name(st) << ": " << ca_last_error() << "\n";
  return static_cast<int>(st);
}

json load_config(const Overrides& o) {
  json j = json::object();
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw std::runtime_error("cannot open config file " + o.config);
    j = json::parse(in);
  }
  auto section = [&](const char* name) -> json& {
    if (!j.contains(name)) j[name] = json::object();
    return j[name];
  };
  if (o.seed) j["seed"] = *o.seed;
  if (o.trials) j["trials"] = *o.trials;
  if (o.out) j["output_dir"] = *o.out;
  if (o.features) section("input")["features"] = *o.features;
  if (o.manifest) section("input")["manifest"] = *o.manifest;
  if (o.label_map) j["label_map"] = *o.label_map;
  if (o.k_over) section("cluster")["k_over"] = *o.k_over;
  if (o.methods) section("cluster")["methods"] = *o.methods;
  if (o.birch_threshold) section("cluster")["birch_threshold"] = *o.birch_threshold;
  if (o.dims) section("umap")["d_out"] = *o.dims;
  if (o.neighbors) section("umap")["k"] = *o.neighbors;
  if (o.epochs) section("umap")["epochs"] = *o.epochs;
  if (o.no_pca) section("pca")["enabled"] = false;
  if (o.reference) section("vote")["reference"] = *o.reference;
  if (o.alignment) section("vote")["alignment"] = *o.alignment;
  if (o.sweep_counts) section("sweep")["counts"] = *o.sweep_counts;
  if (o.sweep_dims) section("sweep")["dims"] = *o.sweep_dims;
  if (o.noise) section("blobs")["noise_fraction"] = *o.noise;
  if (o.sigma) section("blobs")["sigma"] = *o.sigma;
  if (o.host) section("serve")["host"] = *o.host;
  if (o.port) section("serve")["port"] = *o.port;
  if (o.ui_dir) section("serve")["ui_dir"] = *o.ui_dir;
  if (o.debug_graph) j["debug_graph"] = true;
  return j;
}

using StageFn = ca_status (*)(ca_pipeline*, char**);

int run_stage(const Overrides& o, StageFn fn, bool print_summary) {
  const auto cfg = load_config(o).dump();
  ca_pipeline* p = nullptr;
  if (auto st = ca_pipeline_create(cfg.c_str(), &p); st != CA_OK) return report_failure(st);
  char* result = nullptr;
  const auto st = fn(p, &result);
  if (st != CA_OK) {
    ca_pipeline_free(p);
    return report_failure(st);
  }
  if (!o.quiet) std::cout << result << "\n";
  ca_string_free(result);
  if (print_summary) {
    char* text = nullptr;
    if (ca_pipeline_summary(p, &text) == CA_OK) {
      if (*text) std::cout << text;
      ca_string_free(text);
    }
  }
  ca_pipeline_free(p);
  return 0;
}

ca_service* g_service = nullptr;

void on_signal(int) {
  if (g_service) ca_service_stop(g_service);
}

int serve(const Overrides& o) {
  const auto j = load_config(o);
  const auto cfg = j.dump();
  ca_service* s = nullptr;
  if (auto st = ca_service_create(cfg.c_str(), &s); st != CA_OK) return report_failure(st);
  const std::string host = j.contains("serve") && j["serve"].contains("host") ? j["serve"]["host"].get<std::string>()
                                                                              : "127.0.0.1";
  const int port = j.contains("serve") && j["serve"].contains("port") ? j["serve"]["port"].get<int>() : 8080;
  int bound = 0;
  if (auto st = ca_service_bind(s, host.c_str(), port, &bound); st != CA_OK) {
    ca_service_free(s);
    return report_failure(st);
  }
  std::cout << "listening on http://" << host << ":" << bound << std::endl;
  g_service = s;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  const auto st = ca_service_listen(s);
  g_service = nullptr;
  ca_service_free(s);
  return st == CA_OK ? 0 : report_failure(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised image-dataset curation: reduce, cluster, vote, annotate"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ca_version()));

  Overrides o;
  auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--features", o.features, "FMAT feature matrix");
    sub->add_option("--manifest", o.manifest, "sample manifest JSON");
    sub->add_flag("-q,--quiet", o.quiet, "suppress the JSON result");
  };
  auto reduce_opts = [&](CLI::App* sub) {
    sub->add_option("--dims", o.dims, "UMAP output dimension");
    sub->add_option("--neighbors", o.neighbors, "UMAP neighbour count");
    sub->add_option("--epochs", o.epochs, "UMAP epochs");
    sub->add_flag("--no-pca", o.no_pca, "skip the PCA step");
    sub->add_flag("--debug-graph", o.debug_graph, "dump the fuzzy graph to graph.json");
  };
  auto cluster_opts = [&](CLI::App* sub) {
    sub->add_option("--k-over", o.k_over, "over-clustering count");
    sub->add_option("--methods", o.methods, "clusterers (KMEANS,AGG,BIRCH)")->delimiter(',');
    sub->add_option("--birch-threshold", o.birch_threshold, "BIRCH CF radius threshold");
  };
  auto vote_opts = [&](CLI::App* sub) {
    sub->add_option("--reference", o.reference, "reference clusterer")->transform(CLI::IsMember({"KMEANS", "AGG", "BIRCH"}, CLI::ignore_case));
    sub->add_option("--alignment", o.alignment, "label alignment")->transform(CLI::IsMember({"optimal", "greedy"}, CLI::ignore_case));
  };
  auto trial_opts = [&](CLI::App* sub) { sub->add_option("--trials", o.trials, "repeat with consecutive seeds"); };

  auto* blobs = app.add_subcommand("blobs", "write a synthetic labelled benchmark");
  common(blobs);
  blobs->add_option("--noise", o.noise, "fraction of uniform noise rows");
  blobs->add_option("--sigma", o.sigma, "per-class standard deviation");

  auto* reduce = app.add_subcommand("reduce", "PCA + UMAP reduction");
  common(reduce);
  reduce_opts(reduce);

  auto* cluster = app.add_subcommand("cluster", "run the clusterers on the embedding");
  common(cluster);
  cluster_opts(cluster);

  auto* vote = app.add_subcommand("vote", "unanimity vote over saved clusterings");
  common(vote);
  cluster_opts(vote);
  vote_opts(vote);

  auto* evaluate = app.add_subcommand("evaluate", "score the consensus against true labels");
  common(evaluate);
  evaluate->add_option("--label-map", o.label_map, "human label map (default: majority oracle)");

  auto* annotate = app.add_subcommand("annotate", "write per-cluster manifests");
  common(annotate);

  auto* serve_cmd = app.add_subcommand("serve", "annotation HTTP service");
  common(serve_cmd);
  serve_cmd->add_option("--host", o.host, "bind address");
  serve_cmd->add_option("--port", o.port, "port (0 picks a free one)");
  serve_cmd->add_option("--ui-dir", o.ui_dir, "static UI directory served at /");
  serve_cmd->add_option("--label-map", o.label_map, "initial label map");

  auto* finalize = app.add_subcommand("finalize", "write the labelled dataset");
  common(finalize);
  finalize->add_option("--label-map", o.label_map, "label map (default <out>/label_map.json)");

  auto* compare = app.add_subcommand("compare", "single clusterers vs unanimity vote");
  common(compare);
  reduce_opts(compare);
  cluster_opts(compare);
  vote_opts(compare);
  trial_opts(compare);

  auto* sweep = app.add_subcommand("sweep", "sweep cluster counts and embedding sizes");
  common(sweep);
  reduce_opts(sweep);
  cluster_opts(sweep);
  vote_opts(sweep);
  sweep->add_option("--counts", o.sweep_counts, "cluster counts")->delimiter(',');
  sweep->add_option("--sweep-dims", o.sweep_dims, "UMAP output dimensions")->delimiter(',');

  auto* run = app.add_subcommand("run", "reduce, cluster, vote, annotate and evaluate");
  common(run);
  reduce_opts(run);
  cluster_opts(run);
  vote_opts(run);
  trial_opts(run);

  CLI11_PARSE(app, argc, argv);

  try {
    if (blobs->parsed()) return run_stage(o, ca_pipeline_blobs, false);
    if (reduce->parsed()) return run_stage(o, ca_pipeline_reduce, false);
    if (cluster->parsed()) return run_stage(o, ca_pipeline_cluster, false);
    if (vote->parsed()) return run_stage(o, ca_pipeline_vote, false);
    if (evaluate->parsed()) return run_stage(o, ca_pipeline_evaluate, true);
    if (annotate->parsed()) return run_stage(o, ca_pipeline_annotate, false);
    if (finalize->parsed()) return run_stage(o, ca_pipeline_finalize, false);
    if (compare->parsed()) return run_stage(o, ca_pipeline_compare, true);
    if (sweep->parsed()) return run_stage(o, ca_pipeline_sweep, true);
    if (run->parsed()) return run_stage(o, ca_pipeline_run, true);
    if (serve_cmd->parsed()) return serve(o);
  } catch (const std::exception& e) {
    std::cerr << "error [config]: " << e.what() << "\n";
    return CA_ERR_INVALID_CONFIG;
  }
  return 0;
}
