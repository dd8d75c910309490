#include "ca/types.hpp"

#include <algorithm>
#include <cctype>

#include "ca/error.hpp"

namespace ca {

std::string method_name(Method m) {
  switch (m) {
    case Method::KMeans: return "KMEANS";
    case Method::Agg: return "AGG";
    case Method::Birch: return "BIRCH";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  std::string up(name);
  std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
  if (up == "KMEANS") return Method::KMeans;
  if (up == "AGG") return Method::Agg;
  if (up == "BIRCH") return Method::Birch;
  fail(Errc::InvalidArgument, "unknown clustering method '" + name + "'");
}

std::size_t ConsensusResult::retained_count() const {
  return static_cast<std::size_t>(std::count_if(cluster.begin(), cluster.end(), [](auto c) { return c != kRejected; }));
}

}  // namespace ca
