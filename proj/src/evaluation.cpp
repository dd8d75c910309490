#include "ca/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

#include "ca/error.hpp"

namespace ca {

namespace {

std::vector<const std::string*> truth_labels(const ConsensusResult& consensus, const SampleManifest& truth) {
  if (truth.entries.size() != consensus.size()) {
    fail(Errc::LengthMismatch, "truth manifest has " + std::to_string(truth.entries.size()) + " entries for " +
                                   std::to_string(consensus.size()) + " samples");
  }
  std::vector<const std::string*> out(consensus.size(), nullptr);
  for (std::size_t i = 0; i < consensus.size(); ++i) {
    if (truth.entries[i].id != consensus.ids[i]) {
      fail(Errc::BadIds, "truth manifest id '" + truth.entries[i].id + "' does not match sample '" + consensus.ids[i] + "'");
    }
    if (truth.entries[i].true_label) out[i] = &*truth.entries[i].true_label;
  }
  return out;
}

std::string fixed(double v, int digits = 1) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

LabelMap majority_label_map(const ConsensusResult& consensus, const SampleManifest& truth) {
  const auto labels = truth_labels(consensus, truth);
  std::map<std::uint32_t, std::map<std::string, std::size_t>> hist;
  for (std::size_t i = 0; i < consensus.size(); ++i) {
    if (!consensus.retained(i)) continue;
    if (!labels[i]) fail(Errc::InvalidArgument, "sample '" + consensus.ids[i] + "' has no true label");
    ++hist[static_cast<std::uint32_t>(consensus.cluster[i])][*labels[i]];
  }
  if (hist.empty()) fail(Errc::NoRetainedSamples, "no retained samples to label");

  LabelMap map;
  map.provenance = LabelProvenance::MajorityOracle;
  for (const auto& [cluster, counts] : hist) {
    // std::map iterates labels in ascending order, so the first maximum wins ties.
    const std::string* best = nullptr;
    std::size_t best_count = 0;
    for (const auto& [label, count] : counts) {
      if (count > best_count) {
        best = &label;
        best_count = count;
      }
    }
    map.entries[cluster] = *best;
  }
  return map;
}

EvaluationReport evaluate(const ConsensusResult& consensus, const LabelMap& label_map, const SampleManifest& truth) {
  const auto truth_of = truth_labels(consensus, truth);

  std::vector<const std::string*> assigned(consensus.size(), nullptr);
  std::set<std::string> all;
  for (std::size_t i = 0; i < consensus.size(); ++i) {
    if (!consensus.retained(i)) continue;
    const auto cluster = static_cast<std::uint32_t>(consensus.cluster[i]);
    auto it = label_map.entries.find(cluster);
    if (it == label_map.entries.end()) fail(Errc::MissingLabel, "MissingLabel(" + std::to_string(cluster) + ")");
    if (!truth_of[i]) fail(Errc::InvalidArgument, "sample '" + consensus.ids[i] + "' has no true label");
    assigned[i] = &it->second;
    all.insert(it->second);
    all.insert(*truth_of[i]);
  }

  EvaluationReport r;
  r.labels.assign(all.begin(), all.end());
  r.total_count = consensus.size();
  const std::size_t L = r.labels.size();
  r.confusion.assign(L, std::vector<std::int64_t>(L, 0));
  auto index_of = [&](const std::string& s) {
    return static_cast<std::size_t>(std::lower_bound(r.labels.begin(), r.labels.end(), s) - r.labels.begin());
  };

  std::int64_t correct = 0;
  for (std::size_t i = 0; i < consensus.size(); ++i) {
    if (!assigned[i]) continue;
    ++r.retained_count;
    const auto t = index_of(*truth_of[i]), a = index_of(*assigned[i]);
    ++r.confusion[t][a];
    if (t == a) ++correct;
  }

  for (std::size_t a = 0; a < L; ++a) {
    std::int64_t col = 0;
    for (std::size_t t = 0; t < L; ++t) col += r.confusion[t][a];
    if (col > 0) r.per_class_precision[r.labels[a]] = 100.0 * static_cast<double>(r.confusion[a][a]) / static_cast<double>(col);
  }
  r.overall_accuracy = r.retained_count ? 100.0 * static_cast<double>(correct) / static_cast<double>(r.retained_count) : 0.0;
  r.reject_rate = r.total_count
                      ? 100.0 * static_cast<double>(r.total_count - r.retained_count) / static_cast<double>(r.total_count)
                      : 0.0;
  return r;
}

nlohmann::json report_to_json(const EvaluationReport& r) {
  return {{"labels", r.labels},
          {"per_class_precision", r.per_class_precision},
          {"overall_accuracy", r.overall_accuracy},
          {"reject_rate", r.reject_rate},
          {"confusion", r.confusion},
          {"retained_count", r.retained_count},
          {"total_count", r.total_count}};
}

std::string report_to_text(const EvaluationReport& r) {
  std::size_t width = 9;
  for (const auto& [label, p] : r.per_class_precision) width = std::max(width, label.size() + 2);
  std::ostringstream out;
  char head[32];
  std::snprintf(head, sizeof head, "%-12s", "class");
  out << head;
  for (const auto& [label, p] : r.per_class_precision) out << std::string(width - label.size(), ' ') << label;
  out << '\n';
  std::snprintf(head, sizeof head, "%-12s", "precision");
  out << head;
  for (const auto& [label, p] : r.per_class_precision) {
    const auto v = fixed(p);
    out << std::string(width - v.size(), ' ') << v;
  }
  out << '\n';
  out << "overall accuracy: " << fixed(r.overall_accuracy) << "%  (" << r.retained_count << " retained of "
      << r.total_count << ")\n";
  out << "reject rate:      " << fixed(r.reject_rate) << "%\n";
  return out.str();
}

std::string confusion_to_csv(const EvaluationReport& r) {
  std::ostringstream out;
  out << "true\\assigned";
  for (const auto& l : r.labels) out << ',' << l;
  out << '\n';
  for (std::size_t t = 0; t < r.labels.size(); ++t) {
    out << r.labels[t];
    for (auto v : r.confusion[t]) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

ConsensusResult as_consensus(const Clustering& c, std::span<const SampleId> ids) {
  if (ids.size() != c.assignment.size()) fail(Errc::LengthMismatch, "id count does not match clustering");
  ConsensusResult r;
  r.ids.assign(ids.begin(), ids.end());
  r.k = c.k;
  r.reference = c.method;
  for (auto a : c.assignment) r.cluster.push_back(static_cast<std::int32_t>(a));
  return r;
}

Comparison compare_single_vs_vote(const FeatureMatrix& reduced, const SampleManifest& truth,
                                  const ClusterSettings& cluster, const VoteSettings& vote_settings) {
  if (!truth.has_truth()) fail(Errc::InvalidArgument, "compare needs true labels for every sample");
  const auto clusterings = run_clusterers(reduced, cluster);
  Comparison out;
  for (const auto& c : clusterings) {
    const auto single = as_consensus(c, reduced.ids);
    const auto report = evaluate(single, majority_label_map(single, truth), truth);
    out.rows.push_back({method_name(c.method), report.overall_accuracy, report.reject_rate});
  }
  const auto consensus = run_vote(clusterings, reduced.ids, vote_settings);
  const auto report = evaluate(consensus, majority_label_map(consensus, truth), truth);
  out.rows.push_back({"VOTE", report.overall_accuracy, report.reject_rate});
  return out;
}

nlohmann::json comparison_to_json(const Comparison& c) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : c.rows) rows.push_back({{"method", r.name}, {"accuracy", r.accuracy}, {"reject_rate", r.reject_rate}});
  return {{"rows", rows}};
}

std::string comparison_to_text(const Comparison& c) {
  std::ostringstream out;
  char line[128];
  std::snprintf(line, sizeof line, "%-10s %10s %10s\n", "method", "accuracy", "reject%");
  out << line;
  for (const auto& r : c.rows) {
    std::snprintf(line, sizeof line, "%-10s %10.1f %10.1f\n", r.name.c_str(), r.accuracy, r.reject_rate);
    out << line;
  }
  return out.str();
}

}  // namespace ca
