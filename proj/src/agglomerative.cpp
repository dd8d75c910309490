#include <algorithm>
#include <limits>
#include <numeric>

#include "ca/clustering.hpp"
#include "ca/error.hpp"

namespace ca {

namespace {

// Upper-triangular condensed distance storage.
class Condensed {
 public:
  explicit Condensed(std::size_t n) : n_(n), values_(n * (n - 1) / 2) {}
  double& operator()(std::size_t i, std::size_t j) { return values_[index(i, j)]; }
  double operator()(std::size_t i, std::size_t j) const { return values_[index(i, j)]; }

 private:
  std::size_t index(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    return i * (2 * n_ - i - 1) / 2 + (j - i - 1);
  }
  std::size_t n_;
  std::vector<double> values_;
};

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

}  // namespace

std::vector<std::uint32_t> ward_cluster(const std::vector<double>& points, std::size_t dim,
                                        std::span<const double> weights, std::size_t k, Dendrogram* dendrogram) {
  const std::size_t n = weights.size();
  if (points.size() != n * dim) fail(Errc::LengthMismatch, "ward_cluster point buffer does not match weights");
  if (k < 1) fail(Errc::InvalidArgument, "agglomerative needs k >= 1");
  if (k > n) fail(Errc::KTooLarge, "agglomerative k=" + std::to_string(k) + " exceeds n=" + std::to_string(n));
  if (dendrogram) dendrogram->merges.clear();

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };

  if (n > 1 && k < n) {
    Condensed dist(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double acc = 0.0;
        for (std::size_t c = 0; c < dim; ++c) {
          const double diff = points[i * dim + c] - points[j * dim + c];
          acc += diff * diff;
        }
        dist(i, j) = weights[i] * weights[j] / (weights[i] + weights[j]) * acc;
      }
    }

    std::vector<double> size(weights.begin(), weights.end());
    std::vector<bool> active(n, true);
    std::vector<std::size_t> nn(n, kNone);
    std::vector<double> nnd(n, std::numeric_limits<double>::infinity());

    auto refresh = [&](std::size_t i) {
      nn[i] = kNone;
      nnd[i] = std::numeric_limits<double>::infinity();
      for (std::size_t j = i + 1; j < n; ++j) {
        if (active[j] && dist(i, j) < nnd[i]) {
          nnd[i] = dist(i, j);
          nn[i] = j;
        }
      }
    };
    for (std::size_t i = 0; i < n; ++i) refresh(i);

    for (std::size_t step = 0; step < n - k; ++step) {
      std::size_t a = kNone;
      for (std::size_t i = 0; i < n; ++i) {
        if (active[i] && nn[i] != kNone && (a == kNone || nnd[i] < nnd[a])) a = i;
      }
      const std::size_t b = nn[a];
      const double cost = nnd[a];
      if (dendrogram) dendrogram->merges.push_back({a, b, cost});

      active[b] = false;
      parent[b] = a;
      const double na = size[a], nb = size[b];
      for (std::size_t l = 0; l < n; ++l) {
        if (!active[l] || l == a) continue;
        const double nl = size[l];
        dist(l, a) = ((na + nl) * dist(l, a) + (nb + nl) * dist(l, b) - nl * cost) / (na + nb + nl);
      }
      size[a] = na + nb;

      refresh(a);
      for (std::size_t l = 0; l < n; ++l) {
        if (!active[l] || l == a) continue;
        if (nn[l] == b || nn[l] == a) {
          refresh(l);
        } else if (l < a && (dist(l, a) < nnd[l] || (dist(l, a) == nnd[l] && a < nn[l]))) {
          nnd[l] = dist(l, a);
          nn[l] = a;
        }
      }
    }
  }

  std::vector<std::uint32_t> labels(n);
  std::vector<std::size_t> root_label(n, kNone);
  std::uint32_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (root_label[r] == kNone) root_label[r] = next++;
    labels[i] = static_cast<std::uint32_t>(root_label[r]);
  }
  return labels;
}

Clustering agglomerative(const FeatureMatrix& x, std::size_t k, Linkage linkage, Dendrogram* dendrogram) {
  if (linkage != Linkage::Ward) fail(Errc::InvalidArgument, "unsupported linkage");
  std::vector<double> pts(x.data.begin(), x.data.end());
  std::vector<double> w(x.rows, 1.0);
  Clustering out;
  out.method = Method::Agg;
  out.k = k;
  out.assignment = ward_cluster(pts, x.cols, w, k, dendrogram);
  return out;
}

}  // namespace ca
