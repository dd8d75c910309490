#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ca/types.hpp"

namespace ca::test {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("ca_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::vector<SampleId> make_ids(std::size_t n, const std::string& prefix = "s") {
  std::vector<SampleId> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(prefix + std::to_string(i));
  return ids;
}

inline FeatureMatrix matrix(std::size_t n, std::size_t d, const std::vector<double>& values) {
  FeatureMatrix m(n, d, make_ids(n));
  for (std::size_t i = 0; i < n * d; ++i) m.data[i] = static_cast<float>(values[i]);
  return m;
}

inline FeatureMatrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  FeatureMatrix m(n, d, make_ids(n));
  for (auto& v : m.data) v = static_cast<float>(g(rng));
  return m;
}

// Separated isotropic blobs laid out on a circle of radius `spread` in the
// first two coordinates; labels are the generator classes.
struct SimpleBlobs {
  FeatureMatrix x;
  std::vector<std::uint32_t> labels;
};

inline SimpleBlobs simple_blobs(std::size_t classes, std::size_t per_class, std::size_t d, double spread,
                                double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sigma);
  SimpleBlobs out{FeatureMatrix(classes * per_class, d, make_ids(classes * per_class)), {}};
  for (std::size_t c = 0; c < classes; ++c) {
    const double angle = 2.0 * 3.14159265358979323846 * static_cast<double>(c) / static_cast<double>(classes);
    for (std::size_t p = 0; p < per_class; ++p) {
      const std::size_t i = c * per_class + p;
      for (std::size_t j = 0; j < d; ++j) {
        double center = 0.0;
        if (j == 0) center = spread * std::cos(angle);
        if (j == 1) center = spread * std::sin(angle);
        out.x(i, j) = static_cast<float>(center + g(rng));
      }
      out.labels.push_back(static_cast<std::uint32_t>(c));
    }
  }
  return out;
}

// Fraction of samples on which two labelings agree after the best one-to-one
// relabeling, by enumerating permutations (k <= 8).
double agreement_up_to_relabeling(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b,
                                  std::size_t k);

}  // namespace ca::test
