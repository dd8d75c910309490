#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "ca/types.hpp"

namespace ca {

// Exact k-nearest-neighbour lists (self excluded), row i occupying
// [i*k, (i+1)*k). Rows are sorted by (distance, index).
struct KnnGraph {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<std::uint32_t> indices;
  std::vector<double> distances;

  std::span<const std::uint32_t> neighbors(std::size_t i) const { return {indices.data() + i * k, k}; }
  std::span<const double> dists(std::size_t i) const { return {distances.data() + i * k, k}; }
};

KnnGraph knn_graph(const FeatureMatrix& x, std::size_t k);

struct Calibration {
  double rho = 0.0;
  double sigma = 1.0;
  bool clamped = false;  // no root inside [sigma_min, sigma_max]
};

// Solves sum_j exp(-max(0, d_j - rho) / sigma) = log2(k) for sigma by
// bisection on [1e-3 * mean(d), 1e3 * mean(d)], clamping when the root lies
// outside that interval.
Calibration calibrate(std::span<const double> distances, std::size_t k);

// sum_j exp(-max(0, d_j - rho) / sigma) - log2(k)
double calibration_residual(std::span<const double> distances, const Calibration& c, std::size_t k);

struct DirectedEdge {
  std::uint32_t from;
  std::uint32_t to;
  double weight;
};

// Symmetric fuzzy membership graph in CSR form; neighbour lists are sorted by
// index and carry no self edges.
struct MembershipGraph {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<std::size_t> offsets;  // n + 1
  std::vector<std::uint32_t> neighbors;
  std::vector<double> weights;
  std::vector<double> rho;
  std::vector<double> sigma;
  std::vector<bool> clamped;

  std::size_t edge_count() const { return neighbors.size(); }
  // 0 when (i, j) is not an edge.
  double weight(std::size_t i, std::size_t j) const;
};

// Per-point calibration plus directed weights w(i->j).
std::vector<DirectedEdge> directed_memberships(const KnnGraph& knn, std::vector<Calibration>& calibrations);

// w(i,j) = a + b - a*b with a = w(i->j), b = w(j->i), absent edges counting 0.
MembershipGraph fuzzy_union(std::size_t n, std::span<const DirectedEdge> edges);

MembershipGraph membership_graph(const FeatureMatrix& x, std::size_t k);

nlohmann::json graph_to_json(const MembershipGraph& g);

// Low-dimensional similarity 1 / (1 + a * d^(2b)).
struct CurveParams {
  double a = 1.0;
  double b = 1.0;
};

// Least-squares fit on a 300-point grid over [0, 3*spread] of the target
// 1 for d < min_dist, exp(-(d - min_dist) / spread) otherwise.
CurveParams fit_curve(double min_dist, double spread);

struct LayoutParams {
  std::size_t d_out = 200;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  double min_dist = 0.1;
  double spread = 1.0;
  double negative_sample_rate = 5.0;
  double learning_rate = 1.0;
  double repulsion = 1.0;
};

inline constexpr double kMaxStep = 4.0;

// Uniform draws in [0, 10] from the seed.
std::vector<double> initial_layout(std::size_t n, std::size_t d_out, std::uint64_t seed);

// Negative-sampling SGD in place over `embedding` (n x d_out, row-major).
void optimize_layout(const MembershipGraph& graph, std::vector<double>& embedding, const LayoutParams& params);

ReducedEmbedding optimize_layout(const MembershipGraph& graph, const LayoutParams& params,
                                 std::span<const SampleId> ids = {});

struct UmapParams {
  std::size_t k = 15;
  std::size_t d_out = 200;
  std::size_t epochs = 200;
  double min_dist = 0.1;
  double spread = 1.0;
  double negative_sample_rate = 5.0;
  std::uint64_t seed = 0;
};

ReducedEmbedding umap(const FeatureMatrix& x, const UmapParams& params);

}  // namespace ca
