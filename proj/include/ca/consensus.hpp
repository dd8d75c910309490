#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "ca/types.hpp"

namespace ca {

// k_ref x k_other co-occurrence counts, row-major.
struct ContingencyTable {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int64_t> counts;

  std::int64_t operator()(std::size_t a, std::size_t b) const { return counts[a * cols + b]; }
  std::int64_t total() const;
  bool operator==(const ContingencyTable&) const = default;
};

ContingencyTable contingency(const Clustering& ref, const Clustering& other);

// ref_of_other[b] = reference cluster that other-cluster b is relabelled to.
struct AlignmentMap {
  std::vector<std::size_t> ref_of_other;

  bool operator==(const AlignmentMap&) const = default;
};

enum class Alignment { Optimal, Greedy };

std::string alignment_name(Alignment a);
Alignment parse_alignment(const std::string& name);

// Matched mass sum_b table(map[b], b).
std::int64_t matched_mass(const ContingencyTable& table, const AlignmentMap& map);

// Optimal: maximum matched mass (Hungarian), lexicographically smallest among
// optima. Greedy: repeatedly take the largest remaining cell whose row and
// column are both free.
AlignmentMap align(const ContingencyTable& table, Alignment mode = Alignment::Optimal);

// Unanimity vote. Every non-reference clustering is relabelled through
// align(contingency(ref, other)); sample i is retained with ref(i) iff all
// relabelled assignments agree.
ConsensusResult vote(std::span<const Clustering> clusterings, std::size_t reference_index,
                     std::span<const SampleId> ids, Alignment mode = Alignment::Optimal);

// Relabels `other` into the reference label space of `ref`.
std::vector<std::uint32_t> aligned_labels(const Clustering& ref, const Clustering& other,
                                          Alignment mode = Alignment::Optimal);

nlohmann::json consensus_to_json(const ConsensusResult& c);
ConsensusResult consensus_from_json(const nlohmann::json& j);

}  // namespace ca
