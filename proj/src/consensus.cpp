#include "ca/consensus.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <tuple>

#include "ca/assignment.hpp"
#include "ca/clustering.hpp"
#include "ca/error.hpp"

namespace ca {

std::int64_t ContingencyTable::total() const { return std::accumulate(counts.begin(), counts.end(), std::int64_t{0}); }

ContingencyTable contingency(const Clustering& ref, const Clustering& other) {
  if (ref.assignment.size() != other.assignment.size()) {
    fail(Errc::LengthMismatch, "clusterings cover " + std::to_string(ref.assignment.size()) + " and " +
                                   std::to_string(other.assignment.size()) + " samples");
  }
  ContingencyTable t;
  t.rows = ref.k;
  t.cols = other.k;
  t.counts.assign(t.rows * t.cols, 0);
  for (std::size_t i = 0; i < ref.assignment.size(); ++i) {
    const auto a = ref.assignment[i], b = other.assignment[i];
    if (a >= t.rows || b >= t.cols) fail(Errc::InvalidArgument, "cluster index out of range at sample " + std::to_string(i));
    ++t.counts[a * t.cols + b];
  }
  return t;
}

std::string alignment_name(Alignment a) { return a == Alignment::Optimal ? "optimal" : "greedy"; }

Alignment parse_alignment(const std::string& name) {
  if (name == "optimal" || name == "OPTIMAL") return Alignment::Optimal;
  if (name == "greedy" || name == "GREEDY") return Alignment::Greedy;
  fail(Errc::InvalidArgument, "unknown alignment '" + name + "'");
}

std::int64_t matched_mass(const ContingencyTable& table, const AlignmentMap& map) {
  std::int64_t m = 0;
  for (std::size_t b = 0; b < map.ref_of_other.size(); ++b) m += table(map.ref_of_other[b], b);
  return m;
}

AlignmentMap align(const ContingencyTable& table, Alignment mode) {
  if (table.rows != table.cols) {
    fail(Errc::NonSquare, "contingency table is " + std::to_string(table.rows) + "x" + std::to_string(table.cols));
  }
  const std::size_t k = table.rows;
  AlignmentMap map;
  if (mode == Alignment::Optimal) {
    // Rows of the assignment problem are the other clustering's clusters.
    std::vector<std::int64_t> w(k * k);
    for (std::size_t b = 0; b < k; ++b)
      for (std::size_t a = 0; a < k; ++a) w[b * k + a] = table(a, b);
    map.ref_of_other = max_weight_assignment_lex(w, k);
    return map;
  }

  std::vector<std::tuple<std::int64_t, std::size_t, std::size_t>> cells;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) cells.emplace_back(-table(a, b), b, a);
  std::sort(cells.begin(), cells.end());
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  map.ref_of_other.assign(k, kUnset);
  std::vector<bool> ref_used(k, false);
  for (const auto& [neg, b, a] : cells) {
    if (map.ref_of_other[b] == kUnset && !ref_used[a]) {
      map.ref_of_other[b] = a;
      ref_used[a] = true;
    }
  }
  return map;
}

std::vector<std::uint32_t> aligned_labels(const Clustering& ref, const Clustering& other, Alignment mode) {
  const auto map = align(contingency(ref, other), mode);
  std::vector<std::uint32_t> out(other.assignment.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<std::uint32_t>(map.ref_of_other[other.assignment[i]]);
  return out;
}

namespace {

std::string digest(std::span<const Clustering> clusterings, std::size_t reference_index, Alignment mode) {
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
  };
  feed(std::to_string(reference_index) + alignment_name(mode));
  for (const auto& c : clusterings) {
    feed("|" + method_name(c.method) + ":" + std::to_string(c.k) + ":" + std::to_string(c.seed) + ":" +
         std::to_string(c.assignment.size()));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

ConsensusResult vote(std::span<const Clustering> clusterings, std::size_t reference_index,
                     std::span<const SampleId> ids, Alignment mode) {
  if (clusterings.size() < 2) fail(Errc::InvalidArgument, "vote needs at least two clusterings");
  if (reference_index >= clusterings.size()) fail(Errc::InvalidArgument, "reference index out of range");
  const auto& ref = clusterings[reference_index];
  const std::size_t n = ref.assignment.size();
  if (ids.size() != n) fail(Errc::LengthMismatch, "vote got " + std::to_string(ids.size()) + " ids for " + std::to_string(n) + " samples");
  for (const auto& c : clusterings) {
    if (c.k != ref.k) fail(Errc::MismatchedK, "clusterings disagree on k (" + std::to_string(c.k) + " vs " + std::to_string(ref.k) + ")");
    if (c.assignment.size() != n) fail(Errc::LengthMismatch, "clusterings disagree on sample count");
  }

  ConsensusResult out;
  out.ids.assign(ids.begin(), ids.end());
  out.k = ref.k;
  out.reference = ref.method;
  out.cluster.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) out.cluster[i] = static_cast<std::int32_t>(ref.assignment[i]);

  for (std::size_t m = 0; m < clusterings.size(); ++m) {
    if (m == reference_index) continue;
    const auto labels = aligned_labels(ref, clusterings[m], mode);
    for (std::size_t i = 0; i < n; ++i) {
      if (labels[i] != ref.assignment[i]) out.cluster[i] = kRejected;
    }
  }
  const std::size_t rejected = n - out.retained_count();
  out.reject_rate = n ? static_cast<double>(rejected) / static_cast<double>(n) : 0.0;
  out.config_digest = digest(clusterings, reference_index, mode);
  return out;
}

nlohmann::json consensus_to_json(const ConsensusResult& c) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < c.size(); ++i) {
    rows.push_back({{"id", c.ids[i]},
                    {"status", c.retained(i) ? "RETAINED" : "REJECTED"},
                    {"cluster", c.retained(i) ? nlohmann::json(c.cluster[i]) : nlohmann::json(nullptr)}});
  }
  return {{"reference", method_name(c.reference)},
          {"k", c.k},
          {"reject_rate", c.reject_rate},
          {"config_digest", c.config_digest},
          {"per_sample", rows}};
}

ConsensusResult consensus_from_json(const nlohmann::json& j) {
  try {
    ConsensusResult c;
    c.reference = parse_method(j.at("reference").get<std::string>());
    c.k = j.at("k").get<std::size_t>();
    c.reject_rate = j.at("reject_rate").get<double>();
    c.config_digest = j.value("config_digest", std::string{});
    for (const auto& row : j.at("per_sample")) {
      c.ids.push_back(row.at("id").get<std::string>());
      const auto status = row.at("status").get<std::string>();
      if (status == "RETAINED") {
        const auto idx = row.at("cluster").get<std::int32_t>();
        if (idx < 0 || static_cast<std::size_t>(idx) >= c.k) fail(Errc::BadJson, "consensus cluster index out of range");
        c.cluster.push_back(idx);
      } else if (status == "REJECTED") {
        c.cluster.push_back(kRejected);
      } else {
        fail(Errc::BadJson, "unknown consensus status '" + status + "'");
      }
    }
    const std::size_t rejected = c.size() - c.retained_count();
    if (c.size() && c.reject_rate != static_cast<double>(rejected) / static_cast<double>(c.size())) {
      fail(Errc::BadJson, "consensus reject_rate does not match its per-sample statuses");
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::BadJson, std::string("consensus: ") + e.what());
  }
}

}  // namespace ca
