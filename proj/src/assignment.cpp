#include "ca/assignment.hpp"

#include <algorithm>
#include <limits>

#include "ca/error.hpp"

namespace ca {

namespace {

// Minimum-cost assignment over the rows/cols marked live.
std::vector<std::size_t> min_cost(const std::vector<std::int64_t>& cost, std::size_t k) {
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  // 1-based arrays; index 0 is the virtual column.
  std::vector<std::int64_t> u(k + 1, 0), v(k + 1, 0), minv(k + 1);
  std::vector<std::size_t> p(k + 1, 0), way(k + 1, 0);
  std::vector<bool> used(k + 1);
  for (std::size_t i = 1; i <= k; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), false);
    do {
      used[j0] = true;
      const std::size_t i0 = p[j0];
      std::int64_t delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= k; ++j) {
        if (used[j]) continue;
        const std::int64_t cur = cost[(i0 - 1) * k + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= k; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> col_of_row(k);
  for (std::size_t j = 1; j <= k; ++j) col_of_row[p[j] - 1] = j - 1;
  return col_of_row;
}

std::int64_t mass(std::span<const std::int64_t> w, std::size_t k, const std::vector<std::size_t>& col_of_row) {
  std::int64_t total = 0;
  for (std::size_t r = 0; r < k; ++r) total += w[r * k + col_of_row[r]];
  return total;
}

// Optimal mass of the sub-problem with the given rows/cols removed.
std::int64_t restricted_optimum(std::span<const std::int64_t> w, std::size_t k, const std::vector<bool>& row_used,
                                const std::vector<bool>& col_used) {
  std::vector<std::size_t> rows, cols;
  for (std::size_t r = 0; r < k; ++r)
    if (!row_used[r]) rows.push_back(r);
  for (std::size_t c = 0; c < k; ++c)
    if (!col_used[c]) cols.push_back(c);
  const std::size_t m = rows.size();
  if (m == 0) return 0;
  std::vector<std::int64_t> sub(m * m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) sub[a * m + b] = w[rows[a] * k + cols[b]];
  return mass(sub, m, max_weight_assignment(sub, m));
}

}  // namespace

std::vector<std::size_t> max_weight_assignment(std::span<const std::int64_t> weight, std::size_t k) {
  if (weight.size() != k * k) fail(Errc::NonSquare, "assignment weight matrix is not k x k");
  if (k == 0) return {};
  const std::int64_t top = *std::max_element(weight.begin(), weight.end());
  std::vector<std::int64_t> cost(k * k);
  for (std::size_t i = 0; i < k * k; ++i) cost[i] = top - weight[i];
  return min_cost(cost, k);
}

std::vector<std::size_t> max_weight_assignment_lex(std::span<const std::int64_t> weight, std::size_t k) {
  const auto first = max_weight_assignment(weight, k);
  const std::int64_t best = mass(weight, k, first);

  // Fix rows in order, each to the smallest column that still admits an
  // optimal completion.
  std::vector<bool> row_used(k, false), col_used(k, false);
  std::vector<std::size_t> result(k);
  std::int64_t fixed = 0;
  for (std::size_t r = 0; r < k; ++r) {
    row_used[r] = true;
    bool placed = false;
    for (std::size_t c = 0; c < k && !placed; ++c) {
      if (col_used[c]) continue;
      col_used[c] = true;
      if (fixed + weight[r * k + c] + restricted_optimum(weight, k, row_used, col_used) == best) {
        result[r] = c;
        fixed += weight[r * k + c];
        placed = true;
      } else {
        col_used[c] = false;
      }
    }
    if (!placed) fail(Errc::Internal, "lexicographic assignment lost optimality");
  }
  return result;
}

}  // namespace ca
