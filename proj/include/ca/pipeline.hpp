#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ca/annotate.hpp"
#include "ca/ensemble.hpp"
#include "ca/evaluation.hpp"
#include "ca/umap.hpp"

namespace ca {

struct PcaSettings {
  bool enabled = true;
  std::size_t min_dims = 8;
  std::optional<std::size_t> max_dims;  // default min(n-1, d) - 1
};

struct PipelineConfig {
  std::filesystem::path features;  // default <out>/features.fmat
  std::filesystem::path manifest;  // default <out>/manifest.json
  std::filesystem::path output_dir = "out";
  std::optional<std::filesystem::path> label_map;  // human label map for evaluate/finalize
  std::uint64_t seed = 0;
  std::size_t trials = 1;
  PcaSettings pca;
  UmapParams umap;
  ClusterSettings cluster;
  VoteSettings vote;
  BlobSpec blobs;
  std::vector<std::size_t> sweep_counts{8, 12, 16, 20};
  std::vector<std::size_t> sweep_dims;
  std::size_t exemplars = kDefaultExemplars;
  bool debug_graph = false;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::filesystem::path> ui_dir;
};

// Unknown keys are rejected; missing keys keep their defaults.
PipelineConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const PipelineConfig& c);

// Artifact file names inside the output directory.
namespace artifact {
inline constexpr const char* kEmbedding = "embedding.fmat";
inline constexpr const char* kConsensus = "consensus.json";
inline constexpr const char* kClusters = "clusters.json";
inline constexpr const char* kLabelMap = "label_map.json";
inline constexpr const char* kReportJson = "report.json";
inline constexpr const char* kReportText = "report.txt";
inline constexpr const char* kConfusion = "confusion.csv";
inline constexpr const char* kLabeled = "labeled_dataset.json";
std::string clustering(Method m);
}  // namespace artifact

// Stage drivers behind the CLI. Each reads its inputs from disk, writes its
// artifacts to the output directory and returns a JSON summary. Failures are
// raised as StageError naming the stage (dataio, reduce, cluster, vote,
// evaluate, annotate, finalize, compare, sweep).
class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config);

  const PipelineConfig& config() const { return config_; }

  nlohmann::json blobs();
  nlohmann::json reduce();
  nlohmann::json cluster();
  nlohmann::json vote();
  nlohmann::json evaluate();
  nlohmann::json annotate();
  nlohmann::json finalize();
  nlohmann::json compare();
  nlohmann::json sweep();
  // reduce -> cluster -> vote -> annotate (-> evaluate with truth), repeated
  // for `trials` consecutive seeds with a mean/std summary.
  nlohmann::json run();

  // Summary line of the last evaluate()/run().
  const std::string& summary_text() const { return summary_; }

 private:
  nlohmann::json run_once(const PipelineConfig& cfg);
  std::string summary_;
  PipelineConfig config_;
};

// Feature matrix -> optional PCA(+elbow) -> UMAP.
ReducedEmbedding reduce_features(const FeatureMatrix& x, const PipelineConfig& cfg, nlohmann::json* info = nullptr);

}  // namespace ca
