#include "ca/annotate.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "ca/dataio.hpp"
#include "ca/error.hpp"
#include "ca/evaluation.hpp"

namespace ca {

std::vector<ClusterManifest> build_manifests(const ConsensusResult& consensus, const FeatureMatrix& embedding,
                                             const SampleManifest& manifest, std::size_t max_exemplars) {
  if (embedding.rows != consensus.size() || embedding.ids != consensus.ids) {
    fail(Errc::BadIds, "consensus and embedding do not share sample ids");
  }
  check_manifest_matches(manifest, consensus.ids);

  std::map<std::uint32_t, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < consensus.size(); ++i) {
    if (consensus.retained(i)) members[static_cast<std::uint32_t>(consensus.cluster[i])].push_back(i);
  }

  const std::size_t d = embedding.cols;
  std::vector<ClusterManifest> out;
  for (const auto& [cluster, rows] : members) {
    std::vector<double> centroid(d, 0.0);
    for (auto i : rows)
      for (std::size_t c = 0; c < d; ++c) centroid[c] += embedding(i, c);
    for (auto& v : centroid) v /= static_cast<double>(rows.size());

    std::vector<std::pair<double, std::size_t>> by_distance;
    for (auto i : rows) {
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) acc += (embedding(i, c) - centroid[c]) * (embedding(i, c) - centroid[c]);
      by_distance.emplace_back(acc, i);
    }
    std::stable_sort(by_distance.begin(), by_distance.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    ClusterManifest m;
    m.cluster = cluster;
    for (auto i : rows) m.members.push_back(consensus.ids[i]);
    for (std::size_t t = 0; t < std::min(max_exemplars, by_distance.size()); ++t) {
      const auto i = by_distance[t].second;
      m.exemplars.push_back(consensus.ids[i]);
      if (manifest.entries[i].thumbnail_path) m.thumbnails.push_back(*manifest.entries[i].thumbnail_path);
    }
    out.push_back(std::move(m));
  }
  return out;
}

nlohmann::json cluster_manifest_to_json(const ClusterManifest& m, bool with_members) {
  nlohmann::json j = {{"cluster", m.cluster},
                      {"size", m.size()},
                      {"exemplars", m.exemplars},
                      {"thumbnails", m.thumbnails},
                      {"label", m.assigned_label ? nlohmann::json(*m.assigned_label) : nlohmann::json(nullptr)},
                      {"revision", m.revision}};
  if (with_members) j["members"] = m.members;
  return j;
}

std::vector<std::optional<std::string>> apply_label_map(const ConsensusResult& consensus, const LabelMap& labels) {
  std::vector<std::optional<std::string>> out(consensus.size());
  for (std::size_t i = 0; i < consensus.size(); ++i) {
    if (!consensus.retained(i)) continue;
    const auto cluster = static_cast<std::uint32_t>(consensus.cluster[i]);
    auto it = labels.entries.find(cluster);
    if (it == labels.entries.end()) fail(Errc::MissingLabel, "MissingLabel(" + std::to_string(cluster) + ")");
    out[i] = it->second;
  }
  return out;
}

std::vector<SweepRow> sweep_clusters(const FeatureMatrix& reduced, const std::vector<std::size_t>& counts,
                                     const ClusterSettings& cluster, const VoteSettings& vote,
                                     const SampleManifest* truth) {
  std::vector<SweepRow> rows;
  for (auto k : counts) {
    if (k < 2) fail(Errc::InvalidArgument, "sweep cluster counts must be >= 2");
    auto settings = cluster;
    settings.k = k;
    const auto clusterings = run_clusterers(reduced, settings);
    const auto consensus = run_vote(clusterings, reduced.ids, vote);

    SweepRow row;
    row.clusters = k;
    row.reject_rate = 100.0 * consensus.reject_rate;
    std::vector<bool> nonempty(k, false);
    for (auto c : consensus.cluster)
      if (c != kRejected) nonempty[static_cast<std::size_t>(c)] = true;
    row.manifests = static_cast<std::size_t>(std::count(nonempty.begin(), nonempty.end(), true));
    if (truth && truth->has_truth() && consensus.retained_count() > 0) {
      row.accuracy = evaluate(consensus, majority_label_map(consensus, *truth), *truth).overall_accuracy;
    }
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json sweep_to_json(const std::vector<SweepRow>& rows, const std::string& axis) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{axis, r.clusters},
                   {"accuracy", r.accuracy ? nlohmann::json(*r.accuracy) : nlohmann::json(nullptr)},
                   {"reject_rate", r.reject_rate},
                   {"manifests", r.manifests}});
  }
  return {{"axis", axis}, {"rows", arr}};
}

std::string sweep_to_text(const std::vector<SweepRow>& rows, const std::string& axis) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof line, "%-10s %10s %10s %10s\n", axis.c_str(), "accuracy", "reject%", "clusters");
  out << line;
  for (const auto& r : rows) {
    const std::string acc = r.accuracy ? [&] {
      char b[32];
      std::snprintf(b, sizeof b, "%.1f", *r.accuracy);
      return std::string(b);
    }() : std::string("-");
    std::snprintf(line, sizeof line, "%-10zu %10s %10.1f %10zu\n", r.clusters, acc.c_str(), r.reject_rate, r.manifests);
    out << line;
  }
  return out.str();
}

}  // namespace ca
