#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ca/clustering.hpp"
#include "ca/consensus.hpp"

namespace ca {

struct ClusterSettings {
  std::size_t k = 20;
  std::vector<Method> methods{Method::KMeans, Method::Agg, Method::Birch};
  std::optional<double> birch_threshold;
  std::size_t branching_factor = 50;
  Linkage linkage = Linkage::Ward;
  std::size_t n_init = 10;
  std::size_t max_iter = 300;
  double tol = 1e-4;
  std::uint64_t seed = 0;
};

struct VoteSettings {
  Method reference = Method::KMeans;
  Alignment alignment = Alignment::Optimal;
};

Clustering run_clusterer(const FeatureMatrix& x, Method method, const ClusterSettings& settings);

// Leaf entries per requested cluster that the automatic BIRCH threshold aims for.
inline constexpr std::size_t kAutoLeavesPerCluster = 10;

// One clustering per configured method, in configuration order. When no
// BIRCH threshold is configured, auto_threshold is used and halved until the
// CF tree yields at least min(n, kAutoLeavesPerCluster * k) leaf entries.
std::vector<Clustering> run_clusterers(const FeatureMatrix& x, const ClusterSettings& settings);

std::size_t reference_index(std::span<const Clustering> clusterings, Method reference);

ConsensusResult run_vote(std::span<const Clustering> clusterings, std::span<const SampleId> ids,
                         const VoteSettings& settings);

}  // namespace ca
