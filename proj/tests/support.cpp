#include "support.hpp"

#include <algorithm>
#include <numeric>

namespace ca::test {

double agreement_up_to_relabeling(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b,
                                  std::size_t k) {
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::size_t best = 0;
  do {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < a.size(); ++i) hits += perm[b[i]] == a[i];
    best = std::max(best, hits);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(best) / static_cast<double>(a.size());
}

}  // namespace ca::test
