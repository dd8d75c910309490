#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "ca/clustering.hpp"
#include "ca/error.hpp"

namespace ca {

CFEntry::CFEntry(std::span<const double> point) : n(1), ls(point.begin(), point.end()), ss(0.0) {
  for (double v : point) ss += v * v;
}

CFEntry& CFEntry::operator+=(const CFEntry& other) {
  if (ls.empty()) ls.assign(other.ls.size(), 0.0);
  if (ls.size() != other.ls.size()) fail(Errc::LengthMismatch, "CF entries of different dimension");
  n += other.n;
  for (std::size_t i = 0; i < ls.size(); ++i) ls[i] += other.ls[i];
  ss += other.ss;
  return *this;
}

CFEntry operator+(CFEntry lhs, const CFEntry& rhs) {
  lhs += rhs;
  return lhs;
}

std::vector<double> CFEntry::centroid() const {
  std::vector<double> c(ls.size());
  for (std::size_t i = 0; i < ls.size(); ++i) c[i] = ls[i] / static_cast<double>(n);
  return c;
}

double CFEntry::radius() const {
  const double nn = static_cast<double>(n);
  double c2 = 0.0;
  for (double v : ls) c2 += (v / nn) * (v / nn);
  return std::sqrt(std::max(0.0, ss / nn - c2));
}

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc;
}

class CFTreeBuilder {
 public:
  CFTreeBuilder(double threshold, std::size_t branching) : threshold_(threshold), branching_(branching) {
    tree_.nodes.push_back({});
    parent_.push_back(kNoParent);
    tree_.root = 0;
  }

  void insert(std::span<const double> x) {
    const CFEntry point(x);
    std::size_t node = tree_.root;
    while (!tree_.nodes[node].leaf) {
      tree_.nodes[node].cf += point;
      node = closest(tree_.nodes[node].items, x, [&](std::size_t id) -> const CFEntry& { return tree_.nodes[id].cf; });
    }
    auto& leaf = tree_.nodes[node];
    leaf.cf += point;

    bool absorbed = false;
    if (!leaf.items.empty()) {
      const std::size_t entry =
          closest(leaf.items, x, [&](std::size_t id) -> const CFEntry& { return tree_.leaf_entries[id]; });
      CFEntry merged = tree_.leaf_entries[entry] + point;
      if (merged.radius() <= threshold_) {
        tree_.leaf_entries[entry] = std::move(merged);
        tree_.point_entry.push_back(entry);
        absorbed = true;
      }
    }
    if (!absorbed) {
      tree_.leaf_entries.push_back(point);
      tree_.point_entry.push_back(tree_.leaf_entries.size() - 1);
      leaf.items.push_back(tree_.leaf_entries.size() - 1);
    }
    if (tree_.nodes[node].items.size() > branching_) split(node);
  }

  BirchTree finish() { return std::move(tree_); }

 private:
  static constexpr std::size_t kNoParent = std::numeric_limits<std::size_t>::max();

  template <typename Lookup>
  std::size_t closest(const std::vector<std::size_t>& items, std::span<const double> x, Lookup&& cf) const {
    std::size_t best = items.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (auto id : items) {
      const double d = sq_dist(cf(id).centroid(), x);
      if (d < best_d) {
        best_d = d;
        best = id;
      }
    }
    return best;
  }

  const CFEntry& item_cf(const CFTreeNode& node, std::size_t id) const {
    return node.leaf ? tree_.leaf_entries[id] : tree_.nodes[id].cf;
  }

  void split(std::size_t node_id) {
    const bool leaf = tree_.nodes[node_id].leaf;
    const auto items = tree_.nodes[node_id].items;
    std::vector<std::vector<double>> centroids;
    for (auto id : items) centroids.push_back(item_cf(tree_.nodes[node_id], id).centroid());

    // Seeds: farthest pair of item centroids.
    std::size_t p = 0, q = 1;
    double far = -1.0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      for (std::size_t j = i + 1; j < items.size(); ++j) {
        const double d = sq_dist(centroids[i], centroids[j]);
        if (d > far) {
          far = d;
          p = i;
          q = j;
        }
      }
    }

    CFTreeNode left, right;
    left.leaf = right.leaf = leaf;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const bool to_right = i == q || (i != p && sq_dist(centroids[i], centroids[q]) < sq_dist(centroids[i], centroids[p]));
      auto& dst = to_right ? right : left;
      dst.items.push_back(items[i]);
      dst.cf += item_cf(tree_.nodes[node_id], items[i]);
    }

    const std::size_t sibling = tree_.nodes.size();
    tree_.nodes[node_id] = std::move(left);
    tree_.nodes.push_back(std::move(right));
    parent_.push_back(parent_[node_id]);
    if (!leaf) {
      for (auto child : tree_.nodes[node_id].items) parent_[child] = node_id;
      for (auto child : tree_.nodes[sibling].items) parent_[child] = sibling;
    }

    if (parent_[node_id] == kNoParent) {
      CFTreeNode root;
      root.leaf = false;
      root.items = {node_id, sibling};
      root.cf = tree_.nodes[node_id].cf + tree_.nodes[sibling].cf;
      const std::size_t root_id = tree_.nodes.size();
      tree_.nodes.push_back(std::move(root));
      parent_.push_back(kNoParent);
      parent_[node_id] = parent_[sibling] = root_id;
      tree_.root = root_id;
      return;
    }

    const std::size_t up = parent_[node_id];
    auto& siblings = tree_.nodes[up].items;
    siblings.insert(std::find(siblings.begin(), siblings.end(), node_id) + 1, sibling);
    if (siblings.size() > branching_) split(up);
  }

  double threshold_;
  std::size_t branching_;
  BirchTree tree_;
  std::vector<std::size_t> parent_;
};

}  // namespace

BirchTree build_cf_tree(const FeatureMatrix& x, double threshold, std::size_t branching_factor) {
  if (!(threshold > 0.0) || !std::isfinite(threshold)) {
    fail(Errc::BadThreshold, "BIRCH threshold must be positive and finite");
  }
  if (branching_factor < 2) fail(Errc::InvalidArgument, "BIRCH branching factor must be >= 2");
  CFTreeBuilder builder(threshold, branching_factor);
  std::vector<double> row(x.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    std::copy(x.row(i).begin(), x.row(i).end(), row.begin());
    builder.insert(row);
  }
  return builder.finish();
}

Clustering birch(const FeatureMatrix& x, const BirchParams& params, BirchTree* tree_out) {
  if (params.k < 1) fail(Errc::InvalidArgument, "birch needs k >= 1");
  auto tree = build_cf_tree(x, params.threshold, params.branching_factor);
  const std::size_t leaves = tree.leaf_entries.size();
  if (params.k > leaves) {
    fail(Errc::KTooLargeForLeaves, "birch k=" + std::to_string(params.k) + " exceeds the " + std::to_string(leaves) +
                                       " leaf entries produced at threshold " + std::to_string(params.threshold));
  }

  std::vector<double> centroids;
  std::vector<double> weights;
  centroids.reserve(leaves * x.cols);
  for (const auto& e : tree.leaf_entries) {
    auto c = e.centroid();
    centroids.insert(centroids.end(), c.begin(), c.end());
    weights.push_back(static_cast<double>(e.n));
  }
  const auto groups = ward_cluster(centroids, x.cols, weights, params.k);

  Clustering out;
  out.method = Method::Birch;
  out.k = params.k;
  out.assignment.resize(x.rows);
  std::vector<std::int64_t> relabel(params.k, -1);
  std::uint32_t next = 0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    const auto g = groups[tree.point_entry[i]];
    if (relabel[g] < 0) relabel[g] = next++;
    out.assignment[i] = static_cast<std::uint32_t>(relabel[g]);
  }
  if (tree_out) *tree_out = std::move(tree);
  return out;
}

double auto_threshold(const FeatureMatrix& x, std::uint64_t seed) {
  const std::size_t n = x.rows;
  if (n < 2) fail(Errc::InvalidArgument, "auto_threshold needs n >= 2");
  std::mt19937_64 rng(seed);
  constexpr int kPairs = 100;
  double total = 0.0;
  for (int p = 0; p < kPairs; ++p) {
    const std::size_t i = rng() % n;
    std::size_t j = rng() % (n - 1);
    if (j >= i) ++j;
    double acc = 0.0;
    for (std::size_t c = 0; c < x.cols; ++c) {
      const double diff = static_cast<double>(x(i, c)) - x(j, c);
      acc += diff * diff;
    }
    total += std::sqrt(acc);
  }
  return std::max(0.5 * total / kPairs, 1e-6);
}

}  // namespace ca
