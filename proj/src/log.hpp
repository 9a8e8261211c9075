#pragma once

#include <spdlog/spdlog.h>

namespace land {

/// Library logger on stderr. Level from LAND_LOG (trace, debug, info, warn,
/// error, off); warn when unset.
spdlog::logger& log();

}  // namespace land
