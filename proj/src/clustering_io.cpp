#include "ca/clustering.hpp"
#include "ca/error.hpp"

namespace ca {

nlohmann::json clustering_to_json(const Clustering& c) {
  nlohmann::json j = {{"method", method_name(c.method)}, {"k", c.k}, {"seed", c.seed}, {"assignment", c.assignment}};
  if (c.inertia) j["inertia"] = *c.inertia;
  return j;
}

Clustering clustering_from_json(const nlohmann::json& j) {
  try {
    Clustering c;
    c.method = parse_method(j.at("method").get<std::string>());
    c.k = j.at("k").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.assignment = j.at("assignment").get<std::vector<std::uint32_t>>();
    if (j.contains("inertia") && !j.at("inertia").is_null()) c.inertia = j.at("inertia").get<double>();
    for (auto a : c.assignment) {
      if (a >= c.k) fail(Errc::BadJson, "clustering assignment " + std::to_string(a) + " out of range for k=" + std::to_string(c.k));
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::BadJson, std::string("clustering: ") + e.what());
  }
}

}  // namespace ca
