#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fluctuo::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitFail = 2;

struct CliOptions {
  std::filesystem::path config;
  std::filesystem::path out = "fluctuo_out";
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  /// State snapshot format: csv, json or binary.
  std::string format = "binary";
  /// scaling-check only.
  int d = 1;
  std::filesystem::path sequence;
};

const std::vector<std::string>& subcommands();

/// Runs one subcommand; JSON summary to `out`, messages to `err`. Returns the exit code.
int run_command(const std::string& name, const CliOptions& options, std::ostream& out, std::ostream& err);

/// Full command line including argument parsing.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fluctuo::cli
