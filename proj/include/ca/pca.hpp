#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "ca/types.hpp"

namespace ca {

struct PcaModel {
  std::vector<double> mean;        // d
  std::vector<double> components;  // m x d, orthonormal rows
  std::vector<double> eigenvalues; // m, descending, >= 0
  std::size_t dim = 0;

  std::size_t size() const { return eigenvalues.size(); }
  std::span<const double> component(std::size_t i) const { return {components.data() + i * dim, dim}; }
};

// Fits the first `max_dims` principal components (covariance normalised by
// n-1). Uses the d x d covariance when d <= n and the n x n Gram matrix
// otherwise. Throws DegenerateInput when every row is identical.
PcaModel pca_fit(const FeatureMatrix& x, std::size_t max_dims);

// Projects (x - mean) onto the first m components.
ReducedEmbedding pca_transform(const PcaModel& model, const FeatureMatrix& x, std::size_t m);

inline constexpr double kElbowEpsilon = 1e-12;

// Returns the 1-based index i in [min_dims, max_dims] maximising
// eigenvalue_i / (eigenvalue_{i+1} + eps); ties go to the smaller i.
std::size_t elbow_select(std::span<const double> eigenvalues, std::size_t min_dims, std::size_t max_dims);

// Writes <stem>_components.fmat, <stem>_eigenvalues.fmat and <stem>.json.
void write_pca_model(const PcaModel& model, const std::filesystem::path& dir, const std::string& stem = "pca");
PcaModel read_pca_model(const std::filesystem::path& dir, const std::string& stem = "pca");

}  // namespace ca
