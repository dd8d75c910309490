#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "ca/types.hpp"

namespace ca {

// ---- k-means ----

struct KMeansParams {
  std::size_t k = 8;
  std::uint64_t seed = 0;
  std::size_t n_init = 10;
  std::size_t max_iter = 300;
  double tol = 1e-4;  // on the summed squared centre shift
};

struct KMeansTrace {
  // Inertia after each assignment step, one vector per restart.
  std::vector<std::vector<double>> inertia_per_iteration;
  std::vector<double> centers;  // k x d of the winning restart
};

// Best-inertia Lloyd run over n_init k-means++ restarts.
Clustering kmeans(const FeatureMatrix& x, const KMeansParams& params, KMeansTrace* trace = nullptr);

// ---- agglomerative ----

enum class Linkage { Ward };

struct Merge {
  std::size_t a;  // representative (smaller) active index
  std::size_t b;
  double cost;
};

struct Dendrogram {
  std::vector<Merge> merges;
};

// Ward clustering of weighted points (weight = multiplicity). Ward cost of
// merging A and B is |A||B| / (|A|+|B|) * ||cA - cB||^2, updated with the
// Lance-Williams recurrence. Stops after n - k merges. Ties go to the
// lexicographically smallest (a, b) pair. Labels are numbered by first
// appearance in input order.
std::vector<std::uint32_t> ward_cluster(const std::vector<double>& points, std::size_t dim,
                                        std::span<const double> weights, std::size_t k,
                                        Dendrogram* dendrogram = nullptr);

Clustering agglomerative(const FeatureMatrix& x, std::size_t k, Linkage linkage = Linkage::Ward,
                         Dendrogram* dendrogram = nullptr);

// ---- BIRCH ----

struct CFEntry {
  std::uint64_t n = 0;
  std::vector<double> ls;
  double ss = 0.0;

  CFEntry() = default;
  explicit CFEntry(std::span<const double> point);
  CFEntry(std::uint64_t count, std::vector<double> linear_sum, double square_sum)
      : n(count), ls(std::move(linear_sum)), ss(square_sum) {}

  CFEntry& operator+=(const CFEntry& other);
  std::vector<double> centroid() const;
  // sqrt(max(0, SS/N - ||LS/N||^2))
  double radius() const;
  bool operator==(const CFEntry&) const = default;
};

CFEntry operator+(CFEntry lhs, const CFEntry& rhs);

struct BirchParams {
  std::size_t k = 8;
  double threshold = 0.5;
  std::size_t branching_factor = 50;
};

// Read-only view of the CF tree kept for invariant checks.
struct CFTreeNode {
  bool leaf = true;
  CFEntry cf;                       // sum over items
  std::vector<std::size_t> items;   // leaf-entry ids for leaves, node ids otherwise
};

struct BirchTree {
  std::vector<CFTreeNode> nodes;
  std::size_t root = 0;
  std::vector<CFEntry> leaf_entries;
  std::vector<std::size_t> point_entry;  // point -> leaf entry
};

Clustering birch(const FeatureMatrix& x, const BirchParams& params, BirchTree* tree = nullptr);

// Phase 1 only.
BirchTree build_cf_tree(const FeatureMatrix& x, double threshold, std::size_t branching_factor);

// 0.5 x mean distance of 100 seeded random pairs, floored at 1e-6.
double auto_threshold(const FeatureMatrix& x, std::uint64_t seed = 0);

// ---- serialisation ----

nlohmann::json clustering_to_json(const Clustering& c);
Clustering clustering_from_json(const nlohmann::json& j);

}  // namespace ca
