#include "ca/log.hpp"

#include <cstdlib>
#include <string_view>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace ca {

namespace {

spdlog::level::level_enum level_from_env() {
  const char* env = std::getenv("CA_LOG");
  if (env == nullptr) return spdlog::level::warn;
  std::string_view v(env);
  if (v == "error") return spdlog::level::err;
  if (v == "info") return spdlog::level::info;
  if (v == "debug") return spdlog::level::debug;
  return spdlog::level::warn;
}

}  // namespace

spdlog::logger& log() {
  static const auto logger = [] {
    auto l = spdlog::stderr_color_mt("ca");
    l->set_level(level_from_env());
    l->set_pattern("[%l] %v");
    return l;
  }();
  return *logger;
}

}  // namespace ca
