#include "ca/ensemble.hpp"

#include <algorithm>

#include "ca/error.hpp"
#include "ca/log.hpp"

namespace ca {

Clustering run_clusterer(const FeatureMatrix& x, Method method, const ClusterSettings& settings) {
  Clustering c;
  switch (method) {
    case Method::KMeans: {
      KMeansParams p;
      p.k = settings.k;
      p.seed = settings.seed;
      p.n_init = settings.n_init;
      p.max_iter = settings.max_iter;
      p.tol = settings.tol;
      c = kmeans(x, p);
      break;
    }
    case Method::Agg:
      c = agglomerative(x, settings.k, settings.linkage);
      break;
    case Method::Birch: {
      BirchParams p;
      p.k = settings.k;
      p.branching_factor = settings.branching_factor;
      if (settings.birch_threshold) {
        p.threshold = *settings.birch_threshold;
        c = birch(x, p);
        break;
      }
      p.threshold = auto_threshold(x, settings.seed);
      const std::size_t target = std::min(x.rows, kAutoLeavesPerCluster * settings.k);
      for (int attempt = 0; attempt < 60; ++attempt) {
        if (build_cf_tree(x, p.threshold, p.branching_factor).leaf_entries.size() >= target) break;
        p.threshold *= 0.5;
        log().debug("birch: too few leaf entries, retrying with threshold {}", p.threshold);
      }
      c = birch(x, p);
      log().info("birch: threshold {}", p.threshold);
      break;
    }
  }
  c.seed = settings.seed;
  return c;
}

std::vector<Clustering> run_clusterers(const FeatureMatrix& x, const ClusterSettings& settings) {
  std::vector<Clustering> out;
  for (auto m : settings.methods) {
    log().info("clustering: {} k={}", method_name(m), settings.k);
    out.push_back(run_clusterer(x, m, settings));
  }
  return out;
}

std::size_t reference_index(std::span<const Clustering> clusterings, Method reference) {
  for (std::size_t i = 0; i < clusterings.size(); ++i)
    if (clusterings[i].method == reference) return i;
  fail(Errc::InvalidConfig, "reference method " + method_name(reference) + " is not among the clusterings");
}

ConsensusResult run_vote(std::span<const Clustering> clusterings, std::span<const SampleId> ids,
                         const VoteSettings& settings) {
  return vote(clusterings, reference_index(clusterings, settings.reference), ids, settings.alignment);
}

}  // namespace ca
