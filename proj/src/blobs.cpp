#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <numeric>
#include <random>

#include "ca/error.hpp"
#include "ca/evaluation.hpp"

namespace ca {

Blobs make_blobs(const BlobSpec& spec) {
  const std::size_t classes = spec.n_per_class.size();
  if (classes == 0) fail(Errc::InvalidArgument, "make_blobs needs at least one class");
  if (spec.dim < 1) fail(Errc::InvalidArgument, "make_blobs needs dim >= 1");
  if (!(spec.sigma > 0.0)) fail(Errc::InvalidArgument, "make_blobs needs sigma > 0");
  if (!(spec.noise_fraction >= 0.0 && spec.noise_fraction < 1.0)) fail(Errc::InvalidArgument, "noise_fraction must lie in [0, 1)");
  for (auto c : spec.n_per_class)
    if (c < 1) fail(Errc::InvalidArgument, "every class needs at least one sample");

  std::mt19937_64 rng(spec.seed);
  Blobs out;
  if (spec.centers) {
    if (spec.centers->size() != classes * spec.dim) fail(Errc::LengthMismatch, "centers must be classes x dim");
    out.centers = *spec.centers;
  } else {
    std::uniform_real_distribution<double> box(-spec.center_box, spec.center_box);
    out.centers.resize(classes * spec.dim);
    for (auto& v : out.centers) v = box(rng);
  }

  const std::size_t n = std::accumulate(spec.n_per_class.begin(), spec.n_per_class.end(), std::size_t{0});
  std::vector<std::uint32_t> order;
  for (std::size_t c = 0; c < classes; ++c) order.insert(order.end(), spec.n_per_class[c], static_cast<std::uint32_t>(c));
  std::shuffle(order.begin(), order.end(), rng);

  std::normal_distribution<double> gauss(0.0, spec.sigma);
  out.features = FeatureMatrix(n, spec.dim);
  out.labels = order;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = order[i];
    for (std::size_t j = 0; j < spec.dim; ++j) {
      out.features(i, j) = static_cast<float>(out.centers[c * spec.dim + j] + gauss(rng));
    }
  }

  const auto noisy = static_cast<std::size_t>(std::llround(spec.noise_fraction * static_cast<double>(n)));
  if (noisy > 0) {
    std::vector<float> lo(spec.dim, std::numeric_limits<float>::max()), hi(spec.dim, std::numeric_limits<float>::lowest());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < spec.dim; ++j) {
        lo[j] = std::min(lo[j], out.features(i, j));
        hi[j] = std::max(hi[j], out.features(i, j));
      }
    }
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    std::shuffle(rows.begin(), rows.end(), rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t t = 0; t < noisy; ++t) {
      for (std::size_t j = 0; j < spec.dim; ++j) {
        out.features(rows[t], j) = static_cast<float>(lo[j] + (hi[j] - lo[j]) * unit(rng));
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "s%06zu", i);
    out.features.ids.emplace_back(id);
    ManifestEntry e;
    e.id = id;
    e.source_path = std::string("synthetic/") + id;
    e.true_label = "class_" + std::to_string(order[i]);
    out.manifest.entries.push_back(std::move(e));
  }
  return out;
}

}  // namespace ca
