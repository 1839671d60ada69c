#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fluctuo/control.hpp"
#include "fluctuo/noise.hpp"
#include "fluctuo/nonlinearity.hpp"
#include "fluctuo/solver.hpp"

namespace fluctuo {

enum class TimeDifference { forward, centered };
TimeDifference parse_time_difference(const std::string& s);
std::string to_string(TimeDifference t);

struct RateOptions {
  /// forward: (rho^{n+1} - rho^n)/dt - Lap Phi(rho^n), consistent with the explicit scheme.
  TimeDifference scheme = TimeDifference::forward;
  /// Floor on sigma^2 in the Poisson weight.
  double weight_floor = 1e-10;
  double cg_tol = 1e-8;
  /// Accepted relative mass drift between consecutive target states.
  double mass_tol = 1e-10;
};

struct RateEvaluation {
  /// g = sigma(rho_f) grad phi per slice, slices on the target's time knots.
  ControlField control;
  /// 1/2 sum |g|^2 h^d dt
  double rate = 0.0;
  double residual_max = 0.0;
  double floor = 0.0;
  std::size_t cg_iterations = 0;
  /// Rate contribution of each slice.
  std::vector<double> slice_rate;
};

/// Minimal-norm control reproducing a target path: per slice solves
/// -div(sigma^2(rho) grad phi) = d_t rho - Lap Phi(rho) and sets g = sigma(rho) grad phi.
/// Throws DomainError when the target does not conserve mass and SolverError when CG fails.
RateEvaluation minimal_control(const Trajectory& target, const NonlinearitySpec& spec, const RateOptions& opt = {});

/// Rate of the target path started at rho0, +infinity when infeasible (initial state
/// mismatch beyond 1e-10 in L^1, or mass not conserved).
double rate_function(const Field& rho0, const Trajectory& target, const NonlinearitySpec& spec,
                     const RateOptions& opt = {});

struct McLevel {
  double eps = 0.0;
  NoiseParams params;
};

/// alpha = alpha0 (eps/eps0)^(1/8), A = A0 (eps/eps0)^(1/8), K_a = ceil(K0 eps0/eps).
std::vector<McLevel> small_noise_levels(const NoiseParams& base, double eps0, const std::vector<double>& eps);

struct McEntry {
  double eps = 0.0;
  std::size_t n_runs = 0;
  std::size_t hits = 0;
  double p = 0.0;
  /// -eps log p; with zero hits the value is the lower bound -eps log(1/n_runs).
  double neg_eps_log_p = 0.0;
  bool lower_bound_only = false;
  /// Mean over runs of the sup-in-time L^1 distance (capped at the tube radius once exceeded).
  double mean_sup_distance = 0.0;
};

struct McReport {
  double rate = 0.0;
  double tube_radius = 0.0;
  std::vector<McEntry> entries;
  /// -eps log p strictly increasing as eps decreases.
  bool increasing = false;
  /// Smallest-eps entry within a factor `factor` of the rate.
  bool within_factor = false;
  double factor = 5.0;
};

/// Monte Carlo probe of the small-noise limit: for each level, the fraction of runs
/// whose path stays within L^1 distance delta of the target at every step. The target
/// must record every step; its dt and horizon are used for all runs.
McReport mc_small_noise(const Field& rho0, const Trajectory& target, const NonlinearitySpec& spec,
                        const std::vector<McLevel>& levels, const SolverConfig& base, std::size_t n_runs,
                        double delta, double rate, std::uint64_t seed0 = 1, unsigned threads = 1,
                        double factor = 5.0);

}  // namespace fluctuo
