#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ca/ensemble.hpp"
#include "ca/types.hpp"

namespace ca {

inline constexpr std::size_t kDefaultExemplars = 16;

struct ClusterManifest {
  std::uint32_t cluster = 0;
  std::vector<SampleId> members;       // retained members, input order
  std::vector<SampleId> exemplars;     // nearest to the embedding centroid first
  std::vector<std::string> thumbnails; // thumbnail paths of exemplars that have one
  std::optional<std::string> assigned_label;
  std::uint64_t revision = 0;

  std::size_t size() const { return members.size(); }
};

// One manifest per non-empty consensus cluster, ordered by cluster index.
std::vector<ClusterManifest> build_manifests(const ConsensusResult& consensus, const FeatureMatrix& embedding,
                                             const SampleManifest& manifest,
                                             std::size_t max_exemplars = kDefaultExemplars);

nlohmann::json cluster_manifest_to_json(const ClusterManifest& m, bool with_members = true);

// Label per sample; rejected samples stay empty. Many clusters may share a
// label. Throws MissingLabel for a non-empty cluster without an entry.
std::vector<std::optional<std::string>> apply_label_map(const ConsensusResult& consensus, const LabelMap& labels);

struct SweepRow {
  std::size_t clusters = 0;  // k_over, or d_out for dimension sweeps
  std::optional<double> accuracy;
  double reject_rate = 0.0;  // percent
  std::size_t manifests = 0;
};

// Full cluster + vote (+ majority-oracle scoring when `truth` has labels) for
// each requested cluster count.
std::vector<SweepRow> sweep_clusters(const FeatureMatrix& reduced, const std::vector<std::size_t>& counts,
                                     const ClusterSettings& cluster, const VoteSettings& vote,
                                     const SampleManifest* truth);

nlohmann::json sweep_to_json(const std::vector<SweepRow>& rows, const std::string& axis);
std::string sweep_to_text(const std::vector<SweepRow>& rows, const std::string& axis);

}  // namespace ca
