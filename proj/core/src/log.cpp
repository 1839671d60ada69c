#include "fluctuo/log.hpp"

#include <cstdlib>
#include <mutex>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace fluctuo {

namespace {

std::shared_ptr<spdlog::logger> logger() {
  static std::once_flag once;
  static std::shared_ptr<spdlog::logger> lg;
  std::call_once(once, [] {
    lg = spdlog::stderr_color_mt("fluctuo");
    lg->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("FLUCTUO_LOG")) level = spdlog::level::from_str(env);
    lg->set_level(level);
  });
  return lg;
}

}  // namespace

void init_logging() { logger(); }

void log_debug(const std::string& msg) { logger()->debug(msg); }
void log_info(const std::string& msg) { logger()->info(msg); }
void log_warn(const std::string& msg) { logger()->warn(msg); }

}  // namespace fluctuo
