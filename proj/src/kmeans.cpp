#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "ca/clustering.hpp"
#include "ca/error.hpp"

namespace ca {

namespace {

double sq_dist(const double* a, const double* b, std::size_t d) {
  double acc = 0.0;
  for (std::size_t c = 0; c < d; ++c) acc += (a[c] - b[c]) * (a[c] - b[c]);
  return acc;
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<double> kmeans_pp(const std::vector<double>& x, std::size_t n, std::size_t d, std::size_t k,
                              std::mt19937_64& rng) {
  std::vector<double> centers(k * d);
  std::size_t first = rng() % n;
  std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(first * d), d, centers.begin());

  std::vector<double> closest(n);
  for (std::size_t i = 0; i < n; ++i) closest[i] = sq_dist(&x[i * d], &centers[0], d);

  for (std::size_t c = 1; c < k; ++c) {
    const double total = std::accumulate(closest.begin(), closest.end(), 0.0);
    std::size_t pick = 0;
    if (total <= 0.0) {
      pick = rng() % n;
    } else {
      const double r = uniform01(rng) * total;
      double run = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        run += closest[i];
        if (run > r) {
          pick = i;
          break;
        }
      }
    }
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(pick * d), d,
                centers.begin() + static_cast<std::ptrdiff_t>(c * d));
    for (std::size_t i = 0; i < n; ++i) closest[i] = std::min(closest[i], sq_dist(&x[i * d], &centers[c * d], d));
  }
  return centers;
}

// Nearest-centre assignment (ties -> smaller centre index); returns inertia.
double assign(const std::vector<double>& x, std::size_t n, std::size_t d, const std::vector<double>& centers,
              std::size_t k, std::vector<std::uint32_t>& labels, std::vector<double>& dist) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t arg = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double v = sq_dist(&x[i * d], &centers[c * d], d);
      if (v < best) {
        best = v;
        arg = static_cast<std::uint32_t>(c);
      }
    }
    labels[i] = arg;
    dist[i] = best;
    inertia += best;
  }
  return inertia;
}

struct RunResult {
  std::vector<std::uint32_t> labels;
  std::vector<double> centers;
  double inertia = 0.0;
  std::vector<double> history;
};

RunResult lloyd(const std::vector<double>& x, std::size_t n, std::size_t d, const KMeansParams& p,
                std::mt19937_64& rng) {
  const std::size_t k = p.k;
  RunResult r;
  r.centers = kmeans_pp(x, n, d, k, rng);
  r.labels.assign(n, 0);
  std::vector<double> dist(n);
  std::vector<double> next(k * d);
  std::vector<std::size_t> counts(k);

  for (std::size_t iter = 0; iter < p.max_iter; ++iter) {
    r.inertia = assign(x, n, d, r.centers, k, r.labels, dist);
    r.history.push_back(r.inertia);

    std::fill(next.begin(), next.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[r.labels[i]];
      for (std::size_t c = 0; c < d; ++c) next[r.labels[i] * d + c] += x[i * d + c];
    }
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (std::size_t j = 0; j < d; ++j) next[c * d + j] /= static_cast<double>(counts[c]);
        continue;
      }
      // Empty cluster: move its centre onto the point farthest from its own centre.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (!taken[i] && dist[i] > far_d) {
          far_d = dist[i];
          far = i;
        }
      }
      taken[far] = true;
      std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(far * d), d, next.begin() + static_cast<std::ptrdiff_t>(c * d));
    }

    double shift = 0.0;
    for (std::size_t i = 0; i < k * d; ++i) shift += (next[i] - r.centers[i]) * (next[i] - r.centers[i]);
    r.centers.swap(next);
    if (shift < p.tol) break;
  }
  r.inertia = assign(x, n, d, r.centers, k, r.labels, dist);
  r.history.push_back(r.inertia);
  return r;
}

}  // namespace

Clustering kmeans(const FeatureMatrix& x, const KMeansParams& params, KMeansTrace* trace) {
  const std::size_t n = x.rows, d = x.cols;
  if (params.k < 1) fail(Errc::InvalidArgument, "kmeans needs k >= 1");
  if (params.k > n) fail(Errc::KTooLarge, "kmeans k=" + std::to_string(params.k) + " exceeds n=" + std::to_string(n));
  if (params.n_init < 1) fail(Errc::InvalidArgument, "kmeans needs n_init >= 1");

  std::vector<double> xs(x.data.begin(), x.data.end());
  std::mt19937_64 rng(params.seed);

  RunResult best;
  bool have = false;
  if (trace) trace->inertia_per_iteration.clear();
  for (std::size_t run = 0; run < params.n_init; ++run) {
    auto r = lloyd(xs, n, d, params, rng);
    if (trace) trace->inertia_per_iteration.push_back(r.history);
    if (!have || r.inertia < best.inertia) {
      best = std::move(r);
      have = true;
    }
  }
  if (trace) trace->centers = best.centers;

  Clustering out;
  out.method = Method::KMeans;
  out.k = params.k;
  out.seed = params.seed;
  out.assignment = std::move(best.labels);
  out.inertia = best.inertia;
  return out;
}

}  // namespace ca
