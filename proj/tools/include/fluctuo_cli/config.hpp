#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "fluctuo/grid.hpp"
#include "fluctuo/ldp.hpp"
#include "fluctuo/noise.hpp"
#include "fluctuo/nonlinearity.hpp"
#include "fluctuo/solver.hpp"

namespace fluctuo::cli {

inline constexpr const char* kConfigSchema = "fluctuo.config/1";
inline constexpr int kSummarySchemaVersion = 1;

struct NonlinearitySection {
  std::string family = "power_law";
  double m = 2.0;
  double gamma = 1.0;
  double c_nu = 0.0;
  std::string table;
  bool operator==(const NonlinearitySection&) const = default;
};

struct GridSection {
  int d = 1;
  std::size_t N = 64;
  double L = 4.0;
  bool operator==(const GridSection&) const = default;
};

/// Initial density: gaussian (base + amplitude exp(-|x-center|^2 / (2 width^2))),
/// cosine (base + amplitude prod cos(pi x / L)), constant (base), or file (binary snapshot).
struct InitialSection {
  std::string kind = "gaussian";
  double base = 1.0;
  double amplitude = 1.0;
  double width = 0.5;
  double center = 0.0;
  std::string path;
  bool operator==(const InitialSection&) const = default;
};

struct NoiseSection {
  double alpha = 0.9;
  double A = 0.5;
  std::uint64_t K_a = 1;
  bool operator==(const NoiseSection&) const = default;
};

struct SolverSection {
  double dt = 2e-4;
  double eta = 0.0;
  double eps = 0.01;
  double cfl_safety = 0.9;
  std::string negativity_policy = "clamp_and_log";
  double negativity_tol = 1e-10;
  std::size_t output_stride = 50;
  bool operator==(const SolverSection&) const = default;
};

struct RunSection {
  double T = 0.1;
  std::uint64_t seed = 1;
  std::size_t n_runs = 8;
  unsigned threads = 1;
  bool operator==(const RunSection&) const = default;
};

struct ContractSection {
  std::size_t pairs = 4;
  double tolerance = 1.02;
  bool operator==(const ContractSection&) const = default;
};

/// Control for skeleton, rate and mc-ldp targets: zero, or gradient feedback
/// g = sigma(rho) grad(amplitude * prod sin(pi x / L)).
struct ControlSection {
  std::string kind = "potential";
  double amplitude = 0.3;
  bool operator==(const ControlSection&) const = default;
};

struct LdpSection {
  std::vector<double> eps = {0.02, 0.01, 0.005};
  double eps0 = 0.02;
  double delta = 0.5;
  std::size_t n_runs = 100;
  std::string scheme = "forward";
  double factor = 5.0;
  bool operator==(const LdpSection&) const = default;
};

struct DiagnosticsSection {
  std::vector<double> tail_M = {2.0, 4.0};
  std::size_t qv_samples = 2000;
  double theta = 1.0;
  double q = 1.0;
  bool operator==(const DiagnosticsSection&) const = default;
};

struct AssumptionsSection {
  double xi_min = 1e-4;
  double xi_max = 50.0;
  std::size_t n_points = 400;
  double threshold = 100.0;
  bool operator==(const AssumptionsSection&) const = default;
};

struct RunConfig {
  NonlinearitySection nonlinearity;
  GridSection grid;
  InitialSection initial;
  InitialSection initial2{.kind = "gaussian", .base = 1.0, .amplitude = 0.5, .width = 0.8, .center = 0.0, .path = {}};
  NoiseSection noise;
  SolverSection solver;
  RunSection run;
  ContractSection contract;
  ControlSection control;
  LdpSection ldp;
  DiagnosticsSection diagnostics;
  AssumptionsSection assumptions;
  bool operator==(const RunConfig&) const = default;

  Grid make_grid() const;
  NonlinearitySpec make_spec() const;
  NoiseParams make_noise() const;
  SolverConfig make_solver() const;
  Field make_initial(const InitialSection& s) const;
  RateOptions make_rate_options() const;
};

/// Parses an INI document. Unknown sections or keys, malformed values and a
/// mismatching schema string raise ConfigError. Missing keys keep their defaults.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical resolved form: every key, fixed order, doubles at 17 significant digits.
void write_config(const RunConfig& cfg, std::ostream& out);
std::string to_ini(const RunConfig& cfg);

}  // namespace fluctuo::cli
