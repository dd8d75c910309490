#pragma once

#include <spdlog/spdlog.h>

namespace ca {

// Shared stderr logger; level comes from CA_LOG={error,warn,info,debug}
// (default warn).
spdlog::logger& log();

}  // namespace ca
