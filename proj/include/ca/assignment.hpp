#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ca {

// Square integer assignment problem solved with the O(k^3) Hungarian method
// (shortest augmenting paths with potentials). `weight` is k x k row-major;
// returns col_of_row maximising sum_r weight[r][col_of_row[r]].
std::vector<std::size_t> max_weight_assignment(std::span<const std::int64_t> weight, std::size_t k);

// Same optimum, but among all optimal assignments returns the one whose
// col_of_row vector is lexicographically smallest.
std::vector<std::size_t> max_weight_assignment_lex(std::span<const std::int64_t> weight, std::size_t k);

}  // namespace ca
