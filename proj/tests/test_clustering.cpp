#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "ca/clustering.hpp"
#include "ca/ensemble.hpp"
#include "ca/error.hpp"
#include "support.hpp"

using namespace ca;

namespace {

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Internal;
}

double inertia_of(const FeatureMatrix& x, const std::vector<std::uint32_t>& labels, std::size_t k) {
  const std::size_t d = x.cols;
  std::vector<double> sum(k * d, 0.0);
  std::vector<double> count(k, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    count[labels[i]] += 1.0;
    for (std::size_t c = 0; c < d; ++c) sum[labels[i] * d + c] += x(i, c);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      const double mu = sum[labels[i] * d + c] / count[labels[i]];
      total += (x(i, c) - mu) * (x(i, c) - mu);
    }
  }
  return total;
}

// Recompute-all-pairs Ward clustering. Clusters are named by their smallest
// member; ties go to the lexicographically smallest (a, b).
std::vector<Merge> naive_ward(const FeatureMatrix& x) {
  const std::size_t n = x.rows, d = x.cols;
  std::map<std::size_t, std::vector<std::size_t>> clusters;
  for (std::size_t i = 0; i < n; ++i) clusters[i] = {i};
  auto centroid = [&](const std::vector<std::size_t>& m) {
    std::vector<double> c(d, 0.0);
    for (auto i : m)
      for (std::size_t j = 0; j < d; ++j) c[j] += x(i, j);
    for (auto& v : c) v /= static_cast<double>(m.size());
    return c;
  };
  std::vector<Merge> merges;
  while (clusters.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t ba = 0, bb = 0;
    for (auto ia = clusters.begin(); ia != clusters.end(); ++ia) {
      for (auto ib = std::next(ia); ib != clusters.end(); ++ib) {
        const auto ca = centroid(ia->second), cb = centroid(ib->second);
        double dist = 0.0;
        for (std::size_t j = 0; j < d; ++j) dist += (ca[j] - cb[j]) * (ca[j] - cb[j]);
        const double na = static_cast<double>(ia->second.size()), nb = static_cast<double>(ib->second.size());
        const double cost = na * nb / (na + nb) * dist;
        if (cost < best) {
          best = cost;
          ba = ia->first;
          bb = ib->first;
        }
      }
    }
    merges.push_back({ba, bb, best});
    auto moved = clusters[bb];
    clusters[ba].insert(clusters[ba].end(), moved.begin(), moved.end());
    clusters.erase(bb);
  }
  return merges;
}

void check_cf_equal(const CFEntry& a, const CFEntry& b) {
  CHECK(a.n == b.n);
  REQUIRE(a.ls.size() == b.ls.size());
  for (std::size_t i = 0; i < a.ls.size(); ++i) {
    CHECK(std::abs(a.ls[i] - b.ls[i]) <= 1e-9 * std::max(1.0, std::abs(b.ls[i])));
  }
  CHECK(std::abs(a.ss - b.ss) <= 1e-9 * std::max(1.0, std::abs(b.ss)));
}

}  // namespace

// ---- k-means ----

TEST_CASE("kmeans k=1 gives the column mean") {
  const auto x = test::random_matrix(20, 3, 5);
  KMeansParams p;
  p.k = 1;
  KMeansTrace trace;
  const auto c = kmeans(x, p, &trace);
  CHECK(std::all_of(c.assignment.begin(), c.assignment.end(), [](auto a) { return a == 0; }));
  REQUIRE(c.inertia.has_value());
  CHECK(*c.inertia == doctest::Approx(inertia_of(x, c.assignment, 1)).epsilon(1e-9));
  for (std::size_t j = 0; j < 3; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 20; ++i) mean += x(i, j) / 20.0;
    CHECK(trace.centers[j] == doctest::Approx(mean).epsilon(1e-9));
  }
}

TEST_CASE("kmeans two points two clusters") {
  const auto x = test::matrix(2, 2, {0, 0, 3, 4});
  KMeansParams p;
  p.k = 2;
  const auto c = kmeans(x, p);
  CHECK(c.assignment[0] != c.assignment[1]);
  CHECK(*c.inertia == 0.0);
}

TEST_CASE("kmeans recovers separated blobs") {
  const auto blobs = test::simple_blobs(3, 20, 2, 10.0, 0.5, 8);
  KMeansParams p;
  p.k = 3;
  p.seed = 1;
  const auto c = kmeans(blobs.x, p);
  CHECK(test::agreement_up_to_relabeling(blobs.labels, c.assignment, 3) == 1.0);
  // No restart does better than the generator partition.
  CHECK(*c.inertia <= inertia_of(blobs.x, blobs.labels, 3) + 1e-9);
}

TEST_CASE("kmeans inertia is non-increasing in every restart") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto x = test::random_matrix(80, 3, 1000 + seed);
    KMeansParams p;
    p.k = 6;
    p.seed = seed;
    p.n_init = 3;
    KMeansTrace trace;
    kmeans(x, p, &trace);
    for (const auto& history : trace.inertia_per_iteration) {
      for (std::size_t t = 1; t < history.size(); ++t) CHECK(history[t] <= history[t - 1]);
    }
  }
}

TEST_CASE("kmeans termination assigns points to their nearest centre") {
  const auto x = test::random_matrix(60, 4, 3);
  KMeansParams p;
  p.k = 5;
  KMeansTrace trace;
  const auto c = kmeans(x, p, &trace);
  for (std::size_t i = 0; i < x.rows; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t k = 0; k < 5; ++k) {
      double dist = 0.0;
      for (std::size_t j = 0; j < 4; ++j) dist += (x(i, j) - trace.centers[k * 4 + j]) * (x(i, j) - trace.centers[k * 4 + j]);
      if (dist < best) {
        best = dist;
        arg = k;
      }
    }
    CHECK(c.assignment[i] == arg);
  }
}

TEST_CASE("kmeans keeps k live clusters and is deterministic") {
  const auto x = test::matrix(5, 1, {0, 0.1, 0.2, 50, 100});
  KMeansParams p;
  p.k = 5;
  const auto c = kmeans(x, p);
  CHECK(std::set<std::uint32_t>(c.assignment.begin(), c.assignment.end()).size() == 5);
  CHECK(kmeans(x, p) == c);
  p.k = 6;
  CHECK(code_of([&] { kmeans(x, p); }) == Errc::KTooLarge);
}

// ---- Ward ----

TEST_CASE("ward two points") {
  const auto x = test::matrix(2, 2, {1, 2, 4, 6});
  Dendrogram dendro;
  agglomerative(x, 1, Linkage::Ward, &dendro);
  REQUIRE(dendro.merges.size() == 1);
  CHECK(dendro.merges[0].cost == doctest::Approx(25.0 / 2.0));
}

TEST_CASE("ward on a line") {
  const auto x = test::matrix(3, 1, {0, 1, 10});
  const auto c = agglomerative(x, 2);
  CHECK(c.assignment == std::vector<std::uint32_t>{0, 0, 1});
  CHECK(c.method == Method::Agg);
}

TEST_CASE("ward dendrogram matches the naive oracle") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const std::size_t n = 2 + seed % 7;
    const auto x = test::random_matrix(n, 2, 500 + seed);
    Dendrogram dendro;
    agglomerative(x, 1, Linkage::Ward, &dendro);
    const auto oracle = naive_ward(x);
    REQUIRE(dendro.merges.size() == oracle.size());
    for (std::size_t m = 0; m < oracle.size(); ++m) {
      CHECK(dendro.merges[m].a == oracle[m].a);
      CHECK(dendro.merges[m].b == oracle[m].b);
      CHECK(dendro.merges[m].cost == doctest::Approx(oracle[m].cost).epsilon(1e-9));
    }
  }
}

TEST_CASE("ward merge costs are non-decreasing") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto x = test::random_matrix(150, 3, 900 + seed);
    Dendrogram dendro;
    agglomerative(x, 1, Linkage::Ward, &dendro);
    for (std::size_t m = 1; m < dendro.merges.size(); ++m) CHECK(dendro.merges[m].cost >= dendro.merges[m - 1].cost);
  }
}

TEST_CASE("weighted ward equals ward on repeated points") {
  const auto base = test::random_matrix(6, 2, 77);
  const std::vector<double> weights{1, 3, 2, 1, 4, 1};
  std::vector<double> points(base.data.begin(), base.data.end());
  FeatureMatrix expanded(12, 2, test::make_ids(12));
  std::vector<std::size_t> origin;
  std::size_t row = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    for (int r = 0; r < static_cast<int>(weights[i]); ++r) {
      expanded(row, 0) = base(i, 0);
      expanded(row, 1) = base(i, 1);
      origin.push_back(i);
      ++row;
    }
  }
  const auto weighted = ward_cluster(points, 2, weights, 3);
  const auto plain = agglomerative(expanded, 3).assignment;
  std::vector<std::uint32_t> lifted;
  for (auto o : origin) lifted.push_back(weighted[o]);
  CHECK(test::agreement_up_to_relabeling(plain, lifted, 3) == 1.0);
}

// ---- BIRCH ----

TEST_CASE("cf entry closed forms") {
  const std::vector<double> p{1.0, -2.0, 3.0};
  CFEntry sum;
  for (int i = 0; i < 5; ++i) sum += CFEntry(p);
  CHECK(sum == CFEntry(5, {5.0, -10.0, 15.0}, 5.0 * 14.0));
  CHECK(sum.radius() == 0.0);

  const CFEntry a(2, {1.0, 2.0}, 3.0), b(3, {4.0, 5.0}, 6.0);
  CHECK(a + b == CFEntry(5, {5.0, 7.0}, 9.0));
  CHECK(CFEntry(2, {0.0}, 2.0).radius() == doctest::Approx(1.0));
}

TEST_CASE("identical points form one leaf entry") {
  const auto x = test::matrix(6, 2, {1, 2, 1, 2, 1, 2, 1, 2, 1, 2, 1, 2});
  const auto tree = build_cf_tree(x, 0.1, 50);
  REQUIRE(tree.leaf_entries.size() == 1);
  CHECK(tree.leaf_entries[0] == CFEntry(6, {6.0, 12.0}, 30.0));
}

TEST_CASE("cf tree invariants") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto x = test::random_matrix(400, 3, 300 + seed, 2.0);
    const double threshold = 0.3 + 0.1 * static_cast<double>(seed);
    const auto tree = build_cf_tree(x, threshold, 4 + seed);

    for (const auto& e : tree.leaf_entries) CHECK(e.radius() <= threshold);

    // Every point in exactly one entry; entry CFs equal the sum of their points.
    REQUIRE(tree.point_entry.size() == x.rows);
    std::vector<CFEntry> rebuilt(tree.leaf_entries.size());
    for (std::size_t i = 0; i < x.rows; ++i) {
      std::vector<double> row(x.row(i).begin(), x.row(i).end());
      rebuilt[tree.point_entry[i]] += CFEntry(row);
    }
    std::size_t total = 0;
    for (std::size_t e = 0; e < rebuilt.size(); ++e) {
      check_cf_equal(tree.leaf_entries[e], rebuilt[e]);
      total += tree.leaf_entries[e].n;
    }
    CHECK(total == x.rows);

    // Parent CF equals the sum over children; each leaf entry hangs off one leaf.
    std::vector<int> owners(tree.leaf_entries.size(), 0);
    std::vector<bool> reachable(tree.nodes.size(), false);
    std::vector<std::size_t> stack{tree.root};
    while (!stack.empty()) {
      const auto id = stack.back();
      stack.pop_back();
      reachable[id] = true;
      const auto& node = tree.nodes[id];
      CHECK(node.items.size() <= 4 + seed);
      CFEntry sum;
      for (auto item : node.items) {
        if (node.leaf) {
          sum += tree.leaf_entries[item];
          ++owners[item];
        } else {
          sum += tree.nodes[item].cf;
          stack.push_back(item);
        }
      }
      check_cf_equal(node.cf, sum);
    }
    CHECK(std::all_of(owners.begin(), owners.end(), [](int o) { return o == 1; }));
    CHECK(tree.nodes[tree.root].cf.n == x.rows);
  }
}

TEST_CASE("birch recovers separated blobs") {
  const double sigma = 0.5;
  const auto blobs = test::simple_blobs(3, 40, 2, 12.0, sigma, 21);
  BirchParams p;
  p.k = 3;
  p.threshold = 0.5 * sigma;
  const auto c = birch(blobs.x, p);
  CHECK(c.method == Method::Birch);
  CHECK(test::agreement_up_to_relabeling(blobs.labels, c.assignment, 3) == 1.0);
}

TEST_CASE("birch errors") {
  const auto x = test::random_matrix(30, 2, 1);
  BirchParams p;
  p.k = 30;
  p.threshold = 100.0;
  CHECK(code_of([&] { birch(x, p); }) == Errc::KTooLargeForLeaves);
  p.threshold = 0.0;
  CHECK(code_of([&] { birch(x, p); }) == Errc::BadThreshold);
  p.threshold = -1.0;
  CHECK(code_of([&] { build_cf_tree(x, p.threshold, 50); }) == Errc::BadThreshold);
}

TEST_CASE("auto threshold") {
  const auto same = test::matrix(4, 1, {3, 3, 3, 3});
  CHECK(auto_threshold(same) == 1e-6);

  std::vector<double> line;
  for (int i = 0; i < 100; ++i) line.push_back(i);
  const auto x = test::matrix(100, 1, line);
  // Mean |i - j| over distinct pairs of 0..99 is 101/3.
  CHECK(auto_threshold(x, 3) == doctest::Approx(0.5 * 101.0 / 3.0).epsilon(0.25));
  CHECK(auto_threshold(x, 3) == auto_threshold(x, 3));
}

TEST_CASE("ensemble falls back to a finer birch threshold") {
  const auto blobs = test::simple_blobs(4, 30, 3, 15.0, 0.7, 5);
  ClusterSettings s;
  s.k = 20;
  const auto all = run_clusterers(blobs.x, s);
  REQUIRE(all.size() == 3);
  for (const auto& c : all) {
    CHECK(c.k == 20);
    CHECK(c.assignment.size() == blobs.x.rows);
  }
  s.birch_threshold = 1e6;
  CHECK(code_of([&] { run_clusterers(blobs.x, s); }) == Errc::KTooLargeForLeaves);
}

// ---- serialisation ----

TEST_CASE("clustering json round trip") {
  Clustering c;
  c.method = Method::KMeans;
  c.k = 3;
  c.seed = 42;
  c.assignment = {0, 2, 1, 1};
  c.inertia = 1.25;
  CHECK(clustering_from_json(clustering_to_json(c)) == c);
  c.method = Method::Birch;
  c.inertia.reset();
  const auto j = clustering_to_json(c);
  CHECK(j["method"] == "BIRCH");
  CHECK_FALSE(j.contains("inertia"));
  CHECK(clustering_from_json(j) == c);

  auto bad = j;
  bad["assignment"][0] = 7;
  CHECK(code_of([&] { clustering_from_json(bad); }) == Errc::BadJson);
}
