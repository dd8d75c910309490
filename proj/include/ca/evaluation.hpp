#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ca/ensemble.hpp"
#include "ca/types.hpp"

namespace ca {

struct EvaluationReport {
  std::vector<std::string> labels;                    // sorted union of true and assigned labels
  std::map<std::string, double> per_class_precision;  // assigned label -> percent
  double overall_accuracy = 0.0;                      // percent of retained
  double reject_rate = 0.0;                           // percent of total
  std::vector<std::vector<std::int64_t>> confusion;   // true x assigned, indexed by `labels`
  std::size_t retained_count = 0;
  std::size_t total_count = 0;

  bool operator==(const EvaluationReport&) const = default;
};

// Most frequent true label among each cluster's retained members; ties go
// to the lexicographically smallest label.
LabelMap majority_label_map(const ConsensusResult& consensus, const SampleManifest& truth);

EvaluationReport evaluate(const ConsensusResult& consensus, const LabelMap& labels, const SampleManifest& truth);

nlohmann::json report_to_json(const EvaluationReport& r);
std::string report_to_text(const EvaluationReport& r);
std::string confusion_to_csv(const EvaluationReport& r);

// Treats a single clustering as a consensus that retains every sample.
ConsensusResult as_consensus(const Clustering& c, std::span<const SampleId> ids);

struct ComparisonRow {
  std::string name;  // method name or "VOTE"
  double accuracy = 0.0;
  double reject_rate = 0.0;
};

struct Comparison {
  std::vector<ComparisonRow> rows;
};

// Scores every clusterer alone (through its own majority oracle) and the
// unanimity vote on the same reduced embedding.
Comparison compare_single_vs_vote(const FeatureMatrix& reduced, const SampleManifest& truth,
                                  const ClusterSettings& cluster, const VoteSettings& vote);

nlohmann::json comparison_to_json(const Comparison& c);
std::string comparison_to_text(const Comparison& c);

// ---- synthetic benchmark ----

struct BlobSpec {
  std::vector<std::size_t> n_per_class{80, 80, 80, 80};
  std::size_t dim = 64;
  std::optional<std::vector<double>> centers;  // classes x dim
  double center_box = 10.0;                    // auto centres ~ U[-box, box]
  double sigma = 1.0;
  double noise_fraction = 0.0;
  std::uint64_t seed = 0;
};

struct Blobs {
  FeatureMatrix features;
  SampleManifest manifest;
  std::vector<std::uint32_t> labels;  // generator class per row
  std::vector<double> centers;        // classes x dim
};

// Gaussian classes in a seeded random row order; round(noise_fraction * n)
// rows are then replaced by uniform draws over the clean data's bounding box
// (they keep their class label).
Blobs make_blobs(const BlobSpec& spec);

}  // namespace ca
