#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ca {

using SampleId = std::string;

// n x d row-major float32 matrix with one id per row.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;
  std::vector<SampleId> ids;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t n, std::size_t d, std::vector<SampleId> row_ids = {})
      : rows(n), cols(d), data(n * d, 0.0f), ids(std::move(row_ids)) {}

  std::span<const float> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
  std::span<float> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  float operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  float& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }

  bool operator==(const FeatureMatrix&) const = default;
};

// Output of a reduction step; `seed` is the RNG seed that produced it (0 for
// deterministic reducers).
struct ReducedEmbedding {
  FeatureMatrix values;
  std::uint64_t seed = 0;
};

struct ManifestEntry {
  SampleId id;
  std::string source_path;
  std::optional<std::string> thumbnail_path;
  std::optional<std::string> true_label;

  bool operator==(const ManifestEntry&) const = default;
};

struct SampleManifest {
  std::vector<ManifestEntry> entries;

  bool has_truth() const;
  const ManifestEntry* find(const SampleId& id) const;
  bool operator==(const SampleManifest&) const = default;
};

enum class Method { KMeans, Agg, Birch };

std::string method_name(Method m);
Method parse_method(const std::string& name);

struct Clustering {
  Method method = Method::KMeans;
  std::size_t k = 0;
  std::vector<std::uint32_t> assignment;
  std::uint64_t seed = 0;
  std::optional<double> inertia;

  bool operator==(const Clustering&) const = default;
};

inline constexpr std::int32_t kRejected = -1;

struct ConsensusResult {
  std::vector<SampleId> ids;
  // Cluster index in the reference label space, or kRejected.
  std::vector<std::int32_t> cluster;
  std::size_t k = 0;
  double reject_rate = 0.0;
  Method reference = Method::KMeans;
  std::string config_digest;

  std::size_t size() const { return cluster.size(); }
  bool retained(std::size_t i) const { return cluster[i] != kRejected; }
  std::size_t retained_count() const;
  bool operator==(const ConsensusResult&) const = default;
};

enum class LabelProvenance { Human, MajorityOracle };

struct LabelMap {
  LabelProvenance provenance = LabelProvenance::Human;
  std::map<std::uint32_t, std::string> entries;

  bool operator==(const LabelMap&) const = default;
};

}  // namespace ca
