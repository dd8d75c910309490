#include "ca/umap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "ca/error.hpp"
#include "ca/log.hpp"

namespace ca {

// ---- neighbours ----

KnnGraph knn_graph(const FeatureMatrix& x, std::size_t k) {
  const std::size_t n = x.rows;
  if (k < 2) fail(Errc::InvalidArgument, "knn_graph needs k >= 2");
  if (k >= n) fail(Errc::KTooLarge, "knn_graph k=" + std::to_string(k) + " must be < n=" + std::to_string(n));

  KnnGraph g;
  g.n = n;
  g.k = k;
  g.indices.resize(n * k);
  g.distances.resize(n * k);

  std::vector<std::pair<double, std::uint32_t>> row(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = x.row(i);
    std::size_t slot = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      auto xj = x.row(j);
      double acc = 0.0;
      for (std::size_t c = 0; c < x.cols; ++c) {
        const double diff = static_cast<double>(xi[c]) - xj[c];
        acc += diff * diff;
      }
      row[slot++] = {acc, static_cast<std::uint32_t>(j)};
    }
    std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k), row.end());
    for (std::size_t t = 0; t < k; ++t) {
      g.indices[i * k + t] = row[t].second;
      g.distances[i * k + t] = std::sqrt(row[t].first);
    }
  }
  return g;
}

// ---- calibration ----

namespace {

double membership_sum(std::span<const double> distances, double rho, double sigma) {
  double sum = 0.0;
  for (double d : distances) sum += std::exp(-std::max(0.0, d - rho) / sigma);
  return sum;
}

constexpr double kSigmaTolerance = 1e-5;

}  // namespace

Calibration calibrate(std::span<const double> distances, std::size_t k) {
  if (k < 2) fail(Errc::InvalidArgument, "calibrate needs k >= 2");
  Calibration c;
  const double target = std::log2(static_cast<double>(k));

  c.rho = 0.0;
  for (double d : distances) {
    if (d > 0.0) {
      c.rho = d;
      break;
    }
  }
  double mean = distances.empty() ? 0.0 : std::accumulate(distances.begin(), distances.end(), 0.0) /
                                              static_cast<double>(distances.size());
  if (mean <= 0.0) mean = 1.0;
  double lo = 1e-3 * mean, hi = 1e3 * mean;

  const double f_lo = membership_sum(distances, c.rho, lo);
  if (f_lo >= target) {
    c.sigma = lo;
    c.clamped = f_lo - target > kSigmaTolerance;
    return c;
  }
  const double f_hi = membership_sum(distances, c.rho, hi);
  if (f_hi <= target) {
    c.sigma = hi;
    c.clamped = target - f_hi > kSigmaTolerance;
    return c;
  }

  double mid = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    mid = 0.5 * (lo + hi);
    const double f = membership_sum(distances, c.rho, mid);
    if (std::abs(f - target) < 1e-12) break;
    if (f > target) {
      hi = mid;
    } else {
      lo = mid;
    }
    if (hi - lo <= std::numeric_limits<double>::epsilon() * hi) break;
  }
  c.sigma = mid;
  return c;
}

double calibration_residual(std::span<const double> distances, const Calibration& c, std::size_t k) {
  return membership_sum(distances, c.rho, c.sigma) - std::log2(static_cast<double>(k));
}

// ---- fuzzy union ----

double MembershipGraph::weight(std::size_t i, std::size_t j) const {
  auto first = neighbors.begin() + static_cast<std::ptrdiff_t>(offsets[i]);
  auto last = neighbors.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]);
  auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(j));
  if (it == last || *it != j) return 0.0;
  return weights[static_cast<std::size_t>(it - neighbors.begin())];
}

std::vector<DirectedEdge> directed_memberships(const KnnGraph& knn, std::vector<Calibration>& calibrations) {
  calibrations.assign(knn.n, {});
  std::vector<DirectedEdge> edges;
  edges.reserve(knn.n * knn.k);
  for (std::size_t i = 0; i < knn.n; ++i) {
    auto dists = knn.dists(i);
    auto nbrs = knn.neighbors(i);
    const auto cal = calibrate(dists, knn.k);
    calibrations[i] = cal;
    for (std::size_t t = 0; t < knn.k; ++t) {
      const double w = std::exp(-std::max(0.0, dists[t] - cal.rho) / cal.sigma);
      if (w > 0.0) edges.push_back({static_cast<std::uint32_t>(i), nbrs[t], std::min(w, 1.0)});
    }
  }
  return edges;
}

MembershipGraph fuzzy_union(std::size_t n, std::span<const DirectedEdge> edges) {
  // (lo, hi) -> (w(lo->hi), w(hi->lo))
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::pair<double, double>> pairs;
  for (const auto& e : edges) {
    if (e.from == e.to) continue;
    if (e.from >= n || e.to >= n) fail(Errc::InvalidArgument, "fuzzy_union edge index out of range");
    if (!(e.weight > 0.0 && e.weight <= 1.0)) fail(Errc::InvalidArgument, "fuzzy_union weights must lie in (0, 1]");
    const bool forward = e.from < e.to;
    auto& slot = pairs[{std::min(e.from, e.to), std::max(e.from, e.to)}];
    (forward ? slot.first : slot.second) = e.weight;
  }

  std::vector<std::vector<std::pair<std::uint32_t, double>>> adj(n);
  for (const auto& [key, ab] : pairs) {
    const auto [a, b] = ab;
    const double w = a + b - a * b;
    adj[key.first].emplace_back(key.second, w);
    adj[key.second].emplace_back(key.first, w);
  }

  MembershipGraph g;
  g.n = n;
  g.offsets.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(adj[i].begin(), adj[i].end());
    g.offsets[i + 1] = g.offsets[i] + adj[i].size();
    for (const auto& [j, w] : adj[i]) {
      g.neighbors.push_back(j);
      g.weights.push_back(w);
    }
  }
  return g;
}

MembershipGraph membership_graph(const FeatureMatrix& x, std::size_t k) {
  const auto knn = knn_graph(x, k);
  std::vector<Calibration> cals;
  const auto directed = directed_memberships(knn, cals);
  auto g = fuzzy_union(x.rows, directed);
  g.k = k;
  for (const auto& c : cals) {
    g.rho.push_back(c.rho);
    g.sigma.push_back(c.sigma);
    g.clamped.push_back(c.clamped);
  }
  return g;
}

nlohmann::json graph_to_json(const MembershipGraph& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (std::size_t i = 0; i < g.n; ++i) {
    for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e) {
      if (g.neighbors[e] > i) edges.push_back({i, g.neighbors[e], g.weights[e]});
    }
  }
  return {{"n", g.n}, {"k", g.k}, {"rho", g.rho}, {"sigma", g.sigma}, {"edges", edges}};
}

// ---- curve fit ----

CurveParams fit_curve(double min_dist, double spread) {
  if (!(spread > 0.0) || min_dist < 0.0) fail(Errc::InvalidArgument, "fit_curve needs spread > 0 and min_dist >= 0");
  constexpr int kGrid = 300;
  std::vector<double> xs(kGrid), ys(kGrid);
  for (int i = 0; i < kGrid; ++i) {
    xs[i] = 3.0 * spread * i / (kGrid - 1);
    ys[i] = xs[i] < min_dist ? 1.0 : std::exp(-(xs[i] - min_dist) / spread);
  }

  auto sse = [&](double a, double b) {
    double s = 0.0;
    for (int i = 0; i < kGrid; ++i) {
      const double r = 1.0 / (1.0 + a * std::pow(xs[i], 2.0 * b)) - ys[i];
      s += r * r;
    }
    return s;
  };

  // Levenberg-Marquardt on (a, b).
  double a = 1.0, b = 1.0, lambda = 1e-3;
  double cost = sse(a, b);
  for (int iter = 0; iter < 500; ++iter) {
    double jtj00 = 0, jtj01 = 0, jtj11 = 0, jtr0 = 0, jtr1 = 0;
    for (int i = 0; i < kGrid; ++i) {
      if (xs[i] <= 0.0) continue;  // f == 1 there; zero gradient
      const double p = std::pow(xs[i], 2.0 * b);
      const double den = 1.0 + a * p;
      const double f = 1.0 / den;
      const double r = f - ys[i];
      const double da = -p / (den * den);
      const double db = -a * p * 2.0 * std::log(xs[i]) / (den * den);
      jtj00 += da * da;
      jtj01 += da * db;
      jtj11 += db * db;
      jtr0 += da * r;
      jtr1 += db * r;
    }
    bool improved = false;
    for (int tries = 0; tries < 30 && !improved; ++tries) {
      const double m00 = jtj00 * (1.0 + lambda), m11 = jtj11 * (1.0 + lambda);
      const double det = m00 * m11 - jtj01 * jtj01;
      if (det == 0.0) {
        lambda *= 10.0;
        continue;
      }
      const double step_a = -(m11 * jtr0 - jtj01 * jtr1) / det;
      const double step_b = -(m00 * jtr1 - jtj01 * jtr0) / det;
      const double na = a + step_a, nb = b + step_b;
      const double ncost = (na > 0.0 && nb > 0.0) ? sse(na, nb) : std::numeric_limits<double>::infinity();
      if (ncost < cost) {
        const double rel = (cost - ncost) / std::max(cost, 1e-300);
        a = na;
        b = nb;
        cost = ncost;
        lambda = std::max(lambda / 10.0, 1e-12);
        improved = true;
        if (rel < 1e-15) return {a, b};
      } else {
        lambda *= 10.0;
      }
    }
    if (!improved) break;
  }
  return {a, b};
}

// ---- layout ----

std::vector<double> initial_layout(std::size_t n, std::size_t d_out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> emb(n * d_out);
  for (auto& v : emb) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
    v = 10.0 * u;
  }
  return emb;
}

void optimize_layout(const MembershipGraph& graph, std::vector<double>& embedding, const LayoutParams& params) {
  const std::size_t n = graph.n, dim = params.d_out;
  if (dim < 1) fail(Errc::InvalidArgument, "optimize_layout needs d_out >= 1");
  if (params.epochs < 1) fail(Errc::InvalidArgument, "optimize_layout needs epochs >= 1");
  if (embedding.size() != n * dim) fail(Errc::LengthMismatch, "initial embedding has the wrong shape");
  if (n == 0 || graph.edge_count() == 0) return;

  const auto curve = fit_curve(params.min_dist, params.spread);
  const double a = curve.a, b = curve.b;
  const auto epochs = static_cast<double>(params.epochs);

  // Edge sampling schedule: edge e fires every max_w / w_e epochs; edges that
  // would fire less than once over the run are dropped.
  const double max_w = *std::max_element(graph.weights.begin(), graph.weights.end());
  struct Edge {
    std::uint32_t head, tail;
    double per_sample, next, per_negative, next_negative;
  };
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t e = graph.offsets[i]; e < graph.offsets[i + 1]; ++e) {
      const double w = graph.weights[e];
      if (w < max_w / epochs) continue;
      const double per = max_w / w;
      edges.push_back({static_cast<std::uint32_t>(i), graph.neighbors[e], per, per,
                       per / params.negative_sample_rate, per / params.negative_sample_rate});
    }
  }

  std::mt19937_64 rng(params.seed ^ 0x9e3779b97f4a7c15ULL);
  auto clip = [](double g) { return std::clamp(g, -kMaxStep, kMaxStep); };

  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    const double alpha = params.learning_rate * (1.0 - static_cast<double>(epoch) / epochs);
    const auto now = static_cast<double>(epoch);
    for (auto& edge : edges) {
      if (edge.next > now) continue;
      double* cur = embedding.data() + std::size_t{edge.head} * dim;
      double* oth = embedding.data() + std::size_t{edge.tail} * dim;

      double d2 = 0.0;
      for (std::size_t c = 0; c < dim; ++c) d2 += (cur[c] - oth[c]) * (cur[c] - oth[c]);
      if (d2 > 0.0) {
        const double pd2b = std::pow(d2, b);
        const double coef = (-2.0 * a * b * pd2b / d2) / (a * pd2b + 1.0);
        for (std::size_t c = 0; c < dim; ++c) {
          const double g = clip(coef * (cur[c] - oth[c])) * alpha;
          cur[c] += g;
          oth[c] -= g;
        }
      }
      edge.next += edge.per_sample;

      const auto negatives = static_cast<std::size_t>((now - edge.next_negative) / edge.per_negative);
      for (std::size_t p = 0; p < negatives; ++p) {
        const std::size_t other = rng() % n;
        if (other == edge.head) continue;
        const double* neg = embedding.data() + other * dim;
        double nd2 = 0.0;
        for (std::size_t c = 0; c < dim; ++c) nd2 += (cur[c] - neg[c]) * (cur[c] - neg[c]);
        if (nd2 > 0.0) {
          const double coef = 2.0 * params.repulsion * b / ((0.001 + nd2) * (a * std::pow(nd2, b) + 1.0));
          for (std::size_t c = 0; c < dim; ++c) cur[c] += clip(coef * (cur[c] - neg[c])) * alpha;
        } else {
          for (std::size_t c = 0; c < dim; ++c) cur[c] += kMaxStep * alpha;
        }
      }
      edge.next_negative += static_cast<double>(negatives) * edge.per_negative;
    }
  }
}

ReducedEmbedding optimize_layout(const MembershipGraph& graph, const LayoutParams& params,
                                 std::span<const SampleId> ids) {
  auto emb = initial_layout(graph.n, params.d_out, params.seed);
  optimize_layout(graph, emb, params);
  ReducedEmbedding out;
  out.seed = params.seed;
  out.values = FeatureMatrix(graph.n, params.d_out, std::vector<SampleId>(ids.begin(), ids.end()));
  for (std::size_t i = 0; i < emb.size(); ++i) out.values.data[i] = static_cast<float>(emb[i]);
  return out;
}

ReducedEmbedding umap(const FeatureMatrix& x, const UmapParams& params) {
  log().info("umap: n={} d={} k={} d_out={} epochs={}", x.rows, x.cols, params.k, params.d_out, params.epochs);
  const auto graph = membership_graph(x, params.k);
  log().debug("umap: membership graph has {} directed entries", graph.edge_count());
  LayoutParams lp;
  lp.d_out = params.d_out;
  lp.epochs = params.epochs;
  lp.seed = params.seed;
  lp.min_dist = params.min_dist;
  lp.spread = params.spread;
  lp.negative_sample_rate = params.negative_sample_rate;
  return optimize_layout(graph, lp, x.ids);
}

}  // namespace ca
