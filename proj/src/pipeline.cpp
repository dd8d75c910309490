#include "ca/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "ca/annotate.hpp"
#include "ca/dataio.hpp"
#include "ca/error.hpp"
#include "ca/log.hpp"
#include "ca/pca.hpp"

namespace ca {

using nlohmann::json;

// ---- config ----

namespace {

void check_keys(const json& j, const char* section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(Errc::InvalidConfig, std::string(section) + " must be a JSON object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) fail(Errc::InvalidConfig, std::string("unknown config key '") + section + "." + key + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

template <typename T>
void read_opt(const json& j, const char* key, std::optional<T>& out) {
  if (j.contains(key)) out = j.at(key).is_null() ? std::nullopt : std::optional<T>(j.at(key).get<T>());
}

void read_path(const json& j, const char* key, std::filesystem::path& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<std::string>();
}

void read_opt_path(const json& j, const char* key, std::optional<std::filesystem::path>& out) {
  if (j.contains(key)) {
    out = j.at(key).is_null() ? std::nullopt : std::optional<std::filesystem::path>(j.at(key).get<std::string>());
  }
}

json opt_json(const auto& o) { return o ? json(*o) : json(nullptr); }

}  // namespace

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  try {
    check_keys(j, "config", {"input", "output_dir", "label_map", "seed", "trials", "pca", "umap", "cluster", "vote",
                             "blobs", "sweep", "exemplars", "debug_graph", "serve"});
    if (j.contains("input")) {
      const auto& in = j.at("input");
      check_keys(in, "input", {"features", "manifest"});
      read_path(in, "features", c.features);
      read_path(in, "manifest", c.manifest);
    }
    read_path(j, "output_dir", c.output_dir);
    read_opt_path(j, "label_map", c.label_map);
    read(j, "seed", c.seed);
    read(j, "trials", c.trials);
    read(j, "exemplars", c.exemplars);
    read(j, "debug_graph", c.debug_graph);

    if (j.contains("pca")) {
      const auto& p = j.at("pca");
      check_keys(p, "pca", {"enabled", "min_dims", "max_dims"});
      read(p, "enabled", c.pca.enabled);
      read(p, "min_dims", c.pca.min_dims);
      read_opt(p, "max_dims", c.pca.max_dims);
    }
    if (j.contains("umap")) {
      const auto& u = j.at("umap");
      check_keys(u, "umap", {"k", "d_out", "epochs", "min_dist", "spread", "negative_sample_rate"});
      read(u, "k", c.umap.k);
      read(u, "d_out", c.umap.d_out);
      read(u, "epochs", c.umap.epochs);
      read(u, "min_dist", c.umap.min_dist);
      read(u, "spread", c.umap.spread);
      read(u, "negative_sample_rate", c.umap.negative_sample_rate);
    }
    if (j.contains("cluster")) {
      const auto& k = j.at("cluster");
      check_keys(k, "cluster", {"k_over", "methods", "birch_threshold", "branching_factor", "linkage", "n_init",
                                "max_iter", "tol"});
      read(k, "k_over", c.cluster.k);
      if (k.contains("methods")) {
        c.cluster.methods.clear();
        for (const auto& m : k.at("methods")) c.cluster.methods.push_back(parse_method(m.get<std::string>()));
      }
      read_opt(k, "birch_threshold", c.cluster.birch_threshold);
      read(k, "branching_factor", c.cluster.branching_factor);
      read(k, "n_init", c.cluster.n_init);
      read(k, "max_iter", c.cluster.max_iter);
      read(k, "tol", c.cluster.tol);
      if (k.contains("linkage") && k.at("linkage").get<std::string>() != "WARD") {
        fail(Errc::InvalidConfig, "cluster.linkage supports only WARD");
      }
    }
    if (j.contains("vote")) {
      const auto& v = j.at("vote");
      check_keys(v, "vote", {"reference", "alignment"});
      if (v.contains("reference")) c.vote.reference = parse_method(v.at("reference").get<std::string>());
      if (v.contains("alignment")) c.vote.alignment = parse_alignment(v.at("alignment").get<std::string>());
    }
    c.blobs.seed = c.seed;
    if (j.contains("blobs")) {
      const auto& b = j.at("blobs");
      check_keys(b, "blobs", {"n_per_class", "dim", "center_box", "sigma", "noise_fraction", "seed"});
      read(b, "n_per_class", c.blobs.n_per_class);
      read(b, "dim", c.blobs.dim);
      read(b, "center_box", c.blobs.center_box);
      read(b, "sigma", c.blobs.sigma);
      read(b, "noise_fraction", c.blobs.noise_fraction);
      read(b, "seed", c.blobs.seed);
    }
    if (j.contains("sweep")) {
      const auto& s = j.at("sweep");
      check_keys(s, "sweep", {"counts", "dims"});
      read(s, "counts", c.sweep_counts);
      read(s, "dims", c.sweep_dims);
    }
    if (j.contains("serve")) {
      const auto& s = j.at("serve");
      check_keys(s, "serve", {"host", "port", "ui_dir"});
      read(s, "host", c.host);
      read(s, "port", c.port);
      read_opt_path(s, "ui_dir", c.ui_dir);
    }
  } catch (const json::exception& e) {
    fail(Errc::InvalidConfig, std::string("config: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::InvalidConfig) throw;
    fail(Errc::InvalidConfig, std::string("config: ") + e.what());
  }

  if (c.features.empty()) c.features = c.output_dir / "features.fmat";
  if (c.manifest.empty()) c.manifest = c.output_dir / "manifest.json";
  if (c.trials < 1) fail(Errc::InvalidConfig, "trials must be >= 1");
  if (c.cluster.methods.size() < 2) fail(Errc::InvalidConfig, "cluster.methods needs at least two methods");
  std::set<Method> distinct(c.cluster.methods.begin(), c.cluster.methods.end());
  if (distinct.size() != c.cluster.methods.size()) fail(Errc::InvalidConfig, "cluster.methods has duplicates");
  if (!distinct.count(c.vote.reference)) fail(Errc::InvalidConfig, "vote.reference must be one of cluster.methods");
  c.umap.seed = c.seed;
  c.cluster.seed = c.seed;
  return c;
}

json config_to_json(const PipelineConfig& c) {
  json methods = json::array();
  for (auto m : c.cluster.methods) methods.push_back(method_name(m));
  return {
      {"input", {{"features", c.features.string()}, {"manifest", c.manifest.string()}}},
      {"output_dir", c.output_dir.string()},
      {"label_map", c.label_map ? json(c.label_map->string()) : json(nullptr)},
      {"seed", c.seed},
      {"trials", c.trials},
      {"pca", {{"enabled", c.pca.enabled}, {"min_dims", c.pca.min_dims}, {"max_dims", opt_json(c.pca.max_dims)}}},
      {"umap",
       {{"k", c.umap.k},
        {"d_out", c.umap.d_out},
        {"epochs", c.umap.epochs},
        {"min_dist", c.umap.min_dist},
        {"spread", c.umap.spread},
        {"negative_sample_rate", c.umap.negative_sample_rate}}},
      {"cluster",
       {{"k_over", c.cluster.k},
        {"methods", methods},
        {"birch_threshold", opt_json(c.cluster.birch_threshold)},
        {"branching_factor", c.cluster.branching_factor},
        {"linkage", "WARD"},
        {"n_init", c.cluster.n_init},
        {"max_iter", c.cluster.max_iter},
        {"tol", c.cluster.tol}}},
      {"vote", {{"reference", method_name(c.vote.reference)}, {"alignment", alignment_name(c.vote.alignment)}}},
      {"blobs",
       {{"n_per_class", c.blobs.n_per_class},
        {"dim", c.blobs.dim},
        {"center_box", c.blobs.center_box},
        {"sigma", c.blobs.sigma},
        {"noise_fraction", c.blobs.noise_fraction},
        {"seed", c.blobs.seed}}},
      {"sweep", {{"counts", c.sweep_counts}, {"dims", c.sweep_dims}}},
      {"exemplars", c.exemplars},
      {"debug_graph", c.debug_graph},
      {"serve", {{"host", c.host}, {"port", c.port}, {"ui_dir", c.ui_dir ? json(c.ui_dir->string()) : json(nullptr)}}},
  };
}

std::string artifact::clustering(Method m) {
  std::string name = method_name(m);
  for (auto& ch : name) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return "clustering_" + name + ".json";
}

// ---- helpers ----

namespace {

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e);
  } catch (const std::filesystem::filesystem_error& e) {
    throw StageError(name, Error(Errc::Io, e.what()));
  } catch (const json::exception& e) {
    throw StageError(name, Error(Errc::BadJson, e.what()));
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

FeatureMatrix load_features(const PipelineConfig& c) {
  return stage("dataio", [&] { return load_feature_matrix(c.features); });
}

SampleManifest load_truthful_manifest(const PipelineConfig& c, std::span<const SampleId> ids) {
  return stage("dataio", [&] {
    auto m = load_manifest(c.manifest);
    check_manifest_matches(m, ids);
    return m;
  });
}

FeatureMatrix load_embedding(const PipelineConfig& c) {
  return stage("dataio", [&] { return load_feature_matrix(c.output_dir / artifact::kEmbedding); });
}

ConsensusResult load_consensus(const PipelineConfig& c) {
  return stage("dataio", [&] { return consensus_from_json(read_json_file(c.output_dir / artifact::kConsensus)); });
}

struct Stats {
  double mean = 0.0;
  double std = 0.0;
};

Stats stats(const std::vector<double>& v) {
  Stats s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double acc = 0.0;
    for (double x : v) acc += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(acc / static_cast<double>(v.size() - 1));
  }
  return s;
}

std::string pm(const Stats& s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f ± %.1f", s.mean, s.std);
  return buf;
}

PipelineConfig with_seed(const PipelineConfig& base, std::uint64_t seed) {
  auto c = base;
  c.seed = seed;
  c.umap.seed = seed;
  c.cluster.seed = seed;
  return c;
}

}  // namespace

ReducedEmbedding reduce_features(const FeatureMatrix& x, const PipelineConfig& cfg, json* info) {
  FeatureMatrix input = x;
  json meta = json::object();
  if (cfg.pca.enabled) {
    const std::size_t full = std::min(x.rows - 1, x.cols);
    const auto model = pca_fit(x, full);
    std::size_t m = full;
    const std::size_t upper = std::min(cfg.pca.max_dims.value_or(full - 1), full - 1);
    if (full >= 2 && cfg.pca.min_dims <= upper) {
      m = elbow_select(model.eigenvalues, std::max<std::size_t>(cfg.pca.min_dims, 1), upper);
    } else {
      log().info("pca: elbow range empty for {} components, keeping all", full);
    }
    log().info("pca: {} -> {} dims", x.cols, m);
    meta["pca_dims"] = m;
    meta["pca_components"] = full;
    if (!cfg.output_dir.empty()) write_pca_model(model, cfg.output_dir);
    input = pca_transform(model, x, m).values;
  }
  const auto graph = membership_graph(input, cfg.umap.k);
  if (cfg.debug_graph && !cfg.output_dir.empty()) write_json_file(cfg.output_dir / "graph.json", graph_to_json(graph));
  LayoutParams lp;
  lp.d_out = cfg.umap.d_out;
  lp.epochs = cfg.umap.epochs;
  lp.seed = cfg.umap.seed;
  lp.min_dist = cfg.umap.min_dist;
  lp.spread = cfg.umap.spread;
  lp.negative_sample_rate = cfg.umap.negative_sample_rate;
  auto emb = optimize_layout(graph, lp, x.ids);
  meta["d_out"] = cfg.umap.d_out;
  meta["graph_edges"] = graph.edge_count();
  if (info) *info = meta;
  return emb;
}

// ---- stages ----

Pipeline::Pipeline(PipelineConfig config) : config_(std::move(config)) {}

json Pipeline::blobs() {
  return stage("blobs", [&] {
    const auto b = make_blobs(config_.blobs);
    write_feature_matrix(b.features, config_.features);
    write_manifest(b.manifest, config_.manifest);
    return json{{"features", config_.features.string()},
                {"manifest", config_.manifest.string()},
                {"n", b.features.rows},
                {"d", b.features.cols}};
  });
}

json Pipeline::reduce() {
  const auto x = load_features(config_);
  return stage("reduce", [&] {
    json info;
    const auto emb = reduce_features(x, config_, &info);
    write_feature_matrix(emb.values, config_.output_dir / artifact::kEmbedding);
    info["embedding"] = (config_.output_dir / artifact::kEmbedding).string();
    info["n"] = x.rows;
    info["d_in"] = x.cols;
    return info;
  });
}

json Pipeline::cluster() {
  const auto emb = load_embedding(config_);
  return stage("cluster", [&] {
    json out = json::object();
    for (const auto& c : run_clusterers(emb, config_.cluster)) {
      const auto path = config_.output_dir / artifact::clustering(c.method);
      write_json_file(path, clustering_to_json(c));
      out[method_name(c.method)] = path.string();
    }
    return out;
  });
}

json Pipeline::vote() {
  std::vector<Clustering> clusterings;
  const auto emb = load_embedding(config_);
  stage("dataio", [&] {
    for (auto m : config_.cluster.methods) {
      clusterings.push_back(clustering_from_json(read_json_file(config_.output_dir / artifact::clustering(m))));
    }
  });
  return stage("vote", [&] {
    const auto consensus = run_vote(clusterings, emb.ids, config_.vote);
    write_json_file(config_.output_dir / artifact::kConsensus, consensus_to_json(consensus));
    return json{{"reject_rate", consensus.reject_rate},
                {"retained", consensus.retained_count()},
                {"n", consensus.size()},
                {"consensus", (config_.output_dir / artifact::kConsensus).string()}};
  });
}

json Pipeline::evaluate() {
  const auto consensus = load_consensus(config_);
  const auto truth = load_truthful_manifest(config_, consensus.ids);
  std::optional<LabelMap> human;
  if (config_.label_map) human = stage("dataio", [&] { return load_label_map(*config_.label_map); });
  return stage("evaluate", [&] {
    if (!truth.has_truth()) fail(Errc::InvalidArgument, "manifest has no true labels (benchmark mode only)");
    const auto labels = human ? *human : majority_label_map(consensus, truth);
    if (!human) write_label_map(labels, config_.output_dir / "label_map_oracle.json");
    const auto report = ca::evaluate(consensus, labels, truth);
    write_json_file(config_.output_dir / artifact::kReportJson, report_to_json(report));
    summary_ = report_to_text(report);
    write_text(config_.output_dir / artifact::kReportText, summary_);
    write_text(config_.output_dir / artifact::kConfusion, confusion_to_csv(report));
    return report_to_json(report);
  });
}

json Pipeline::annotate() {
  const auto consensus = load_consensus(config_);
  const auto emb = load_embedding(config_);
  const auto manifest = load_truthful_manifest(config_, consensus.ids);
  return stage("annotate", [&] {
    const auto manifests = build_manifests(consensus, emb, manifest, config_.exemplars);
    json arr = json::array();
    for (const auto& m : manifests) arr.push_back(cluster_manifest_to_json(m));
    write_json_file(config_.output_dir / artifact::kClusters, arr);
    return json{{"clusters", manifests.size()}, {"retained", consensus.retained_count()},
                {"path", (config_.output_dir / artifact::kClusters).string()}};
  });
}

json Pipeline::finalize() {
  const auto consensus = load_consensus(config_);
  const auto manifest = load_truthful_manifest(config_, consensus.ids);
  const auto labels = stage("dataio", [&] {
    return load_label_map(config_.label_map.value_or(config_.output_dir / artifact::kLabelMap));
  });
  return stage("finalize", [&] {
    const auto path = config_.output_dir / artifact::kLabeled;
    const auto count = write_labeled_dataset(manifest, consensus, labels, path);
    return json{{"labeled_count", count}, {"output_path", path.string()}};
  });
}

json Pipeline::run_once(const PipelineConfig& cfg) {
  Pipeline p(cfg);
  json out;
  out["seed"] = cfg.seed;
  out["reduce"] = p.reduce();
  out["cluster"] = p.cluster();
  out["vote"] = p.vote();
  out["annotate"] = p.annotate();
  const auto manifest = stage("dataio", [&] { return load_manifest(cfg.manifest); });
  if (manifest.has_truth()) {
    out["evaluate"] = p.evaluate();
    summary_ = p.summary_text();
  }
  return out;
}

json Pipeline::run() {
  json trials = json::array();
  std::vector<double> acc, rej;
  summary_.clear();
  std::string first_summary;
  for (std::size_t t = 0; t < config_.trials; ++t) {
    auto cfg = with_seed(config_, config_.seed + t);
    if (config_.trials > 1) cfg.output_dir = config_.output_dir / ("trial_" + std::to_string(t));
    auto r = run_once(cfg);
    if (r.contains("evaluate")) {
      acc.push_back(r["evaluate"]["overall_accuracy"].get<double>());
      rej.push_back(r["evaluate"]["reject_rate"].get<double>());
    } else {
      rej.push_back(100.0 * r["vote"]["reject_rate"].get<double>());
    }
    if (t == 0) first_summary = summary_;
    trials.push_back(std::move(r));
  }
  json out = {{"trials", trials}};
  std::string line;
  if (!acc.empty()) {
    const auto a = stats(acc);
    out["accuracy_mean"] = a.mean;
    out["accuracy_std"] = a.std;
    line += "overall accuracy " + pm(a) + "%  ";
  }
  const auto r = stats(rej);
  out["reject_mean"] = r.mean;
  out["reject_std"] = r.std;
  line += "reject " + pm(r) + "%  (" + std::to_string(config_.trials) + " trial" + (config_.trials > 1 ? "s" : "") + ")";
  summary_ = first_summary + line + "\n";
  stage("dataio", [&] { write_json_file(config_.output_dir / "run_summary.json", out); });
  return out;
}

json Pipeline::compare() {
  const auto x = load_features(config_);
  const auto truth = load_truthful_manifest(config_, x.ids);
  return stage("compare", [&] {
    if (!truth.has_truth()) fail(Errc::InvalidArgument, "compare needs true labels (benchmark mode only)");
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> per;
    std::vector<std::string> order;
    json trials = json::array();
    for (std::size_t t = 0; t < config_.trials; ++t) {
      auto cfg = with_seed(config_, config_.seed + t);
      cfg.output_dir.clear();
      const auto emb = reduce_features(x, cfg);
      const auto table = compare_single_vs_vote(emb.values, truth, cfg.cluster, cfg.vote);
      trials.push_back(comparison_to_json(table));
      for (const auto& row : table.rows) {
        if (!per.count(row.name)) order.push_back(row.name);
        per[row.name].first.push_back(row.accuracy);
        per[row.name].second.push_back(row.reject_rate);
      }
    }
    Comparison mean;
    json rows = json::array();
    for (const auto& name : order) {
      const auto a = stats(per[name].first), r = stats(per[name].second);
      mean.rows.push_back({name, a.mean, r.mean});
      rows.push_back({{"method", name}, {"accuracy_mean", a.mean}, {"accuracy_std", a.std}, {"reject_mean", r.mean},
                      {"reject_std", r.std}});
    }
    summary_ = comparison_to_text(mean);
    json out = {{"rows", rows}, {"trials", trials}};
    write_json_file(config_.output_dir / "compare.json", out);
    write_text(config_.output_dir / "compare.txt", summary_);
    return out;
  });
}

json Pipeline::sweep() {
  const auto x = load_features(config_);
  const auto manifest = stage("dataio", [&] {
    SampleManifest m;
    if (std::filesystem::exists(config_.manifest)) {
      m = load_manifest(config_.manifest);
      check_manifest_matches(m, x.ids);
    }
    return m;
  });
  return stage("sweep", [&] {
    const SampleManifest* truth = manifest.has_truth() ? &manifest : nullptr;
    auto cfg = config_;
    cfg.output_dir.clear();
    json out = json::object();
    summary_.clear();
    if (!config_.sweep_counts.empty()) {
      const auto emb = reduce_features(x, cfg);
      const auto rows = sweep_clusters(emb.values, config_.sweep_counts, cfg.cluster, cfg.vote, truth);
      out["clusters"] = sweep_to_json(rows, "k_over");
      summary_ += sweep_to_text(rows, "k_over");
    }
    if (!config_.sweep_dims.empty()) {
      std::vector<SweepRow> rows;
      for (auto d : config_.sweep_dims) {
        auto dcfg = cfg;
        dcfg.umap.d_out = d;
        const auto emb = reduce_features(x, dcfg);
        auto row = sweep_clusters(emb.values, {cfg.cluster.k}, cfg.cluster, cfg.vote, truth).front();
        row.clusters = d;
        rows.push_back(row);
      }
      out["dims"] = sweep_to_json(rows, "d_out");
      if (!summary_.empty()) summary_ += "\n";
      summary_ += sweep_to_text(rows, "d_out");
    }
    write_json_file(config_.output_dir / "sweep.json", out);
    write_text(config_.output_dir / "sweep.txt", summary_);
    return out;
  });
}

}  // namespace ca
