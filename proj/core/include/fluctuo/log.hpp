#pragma once

#include <string>

namespace fluctuo {

/// Configures the library logger from FLUCTUO_LOG (trace, debug, info, warn, error, off).
/// Defaults to warn. Safe to call repeatedly.
void init_logging();

void log_debug(const std::string& msg);
void log_info(const std::string& msg);
void log_warn(const std::string& msg);

}  // namespace fluctuo
