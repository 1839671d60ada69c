#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "fluctuo/control.hpp"
#include "fluctuo/grid.hpp"
#include "fluctuo/noise.hpp"
#include "fluctuo/nonlinearity.hpp"

namespace fluctuo {

enum class NegativityPolicy { clamp_and_log, reject };
NegativityPolicy parse_negativity_policy(const std::string& s);
std::string to_string(NegativityPolicy p);

/// Floor applied to the face density inside sigma'.
inline constexpr double kRhoFloor = 1e-12;

struct SolverConfig {
  double dt = 1e-4;
  /// Artificial viscosity eta.
  double eta = 0.0;
  /// Noise amplitude: sqrt(eps) multiplies sigma(rho) dxi.
  double eps = 0.0;
  double cfl_safety = 0.9;
  NegativityPolicy negativity_policy = NegativityPolicy::clamp_and_log;
  double negativity_tol = 1e-10;
  /// Record every output_stride-th state (the final state is always recorded).
  std::size_t output_stride = 1;
  bool record_states = true;
  /// Entropy/dissipation per step; disable for speed when only states are needed.
  bool record_diagnostics = true;
};

struct StepDiagnostics {
  double t = 0.0;
  double mass_excess = 0.0;
  double entropy = 0.0;
  /// Instantaneous sum_faces |grad Phi^(1/2)(rho)|^2 h^d.
  double dissipation = 0.0;
  /// Left-point time integral of `dissipation` over [0, t].
  double dissipation_cum = 0.0;
  double min_rho = 0.0;
  /// L^1 distance to the reference field (or coupled partner); NaN when absent.
  double l1_to_reference = 0.0;
};

struct Trajectory {
  Grid grid;
  double gamma = 1.0;
  double dt = 0.0;
  double eps = 0.0;
  /// Quadratic variation ||kappa^alpha||^2 of the driving noise (0 without noise).
  double a_norm_sq = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> times;
  std::vector<Field> states;
  /// One record per time step including t = 0.
  std::vector<StepDiagnostics> diagnostics;
  std::size_t clamp_events = 0;
  double clamped_mass = 0.0;
  double min_rho_seen = 0.0;
};

/// Called after every step with (step number, time, state); returning false stops the run.
using StepObserver = std::function<bool(std::size_t, double, const Field&)>;

/// Explicit conservative Euler-Maruyama stepper. Every term is a face flux:
///   F = grad Phi(rho) + eta grad rho + (eps Q / 2) sigma'(rho_f)^2 grad rho - nu(rho_f),
///   rho' = rho + dt div F - sqrt(eps) div(sigma(rho_f) dW) - dt div(sigma(rho_f) u),
/// with rho_f the arithmetic mean of the adjacent cells, Q = ||kappa^alpha||^2 and u an
/// optional face velocity (controls).
///
/// Holds scratch buffers; one instance per thread.
class Stepper {
 public:
  Stepper(NonlinearitySpec spec, SolverConfig config, double qv);

  const NonlinearitySpec& spec() const { return spec_; }
  const SolverConfig& config() const { return config_; }

  /// Largest stable step for `rho`.
  double dt_max(const Field& rho) const;
  /// Advances rho in place. dW may be null (no noise), u may be null (no control).
  /// Throws CflViolation before modifying rho; returns the mass clamped (0 if none).
  double advance(Field& rho, double dt, const VectorField* dW, const VectorField* u);

 private:
  NonlinearitySpec spec_;
  SolverConfig config_;
  double qv_;
  std::vector<double> phi_;
};

/// One Ito step: rho' = rho + dt div F - sqrt(eps) div(sigma dW).
Field step_ito(const Field& state, const NonlinearitySpec& spec, const NoiseModel& noise,
               const SolverConfig& config, const VectorField& increment, double dt);

Trajectory solve(const Field& initial, const NonlinearitySpec& spec, const NoiseParams& params,
                 const SolverConfig& config, double T, std::uint64_t seed,
                 const Field* reference = nullptr, const StepObserver& observer = {});

/// Two trajectories driven by the identical noise realization; each records its L^1
/// distance to the other in l1_to_reference.
std::pair<Trajectory, Trajectory> coupled_solve(const Field& initial1, const Field& initial2,
                                                const NonlinearitySpec& spec, const NoiseParams& params,
                                                const SolverConfig& config, double T, std::uint64_t seed);

struct ControlOptions {
  /// Multiply the mollified control by exp(-A|x|^2/2) and add the constant-direction part.
  bool envelope = true;
  /// Convolve the control with kappa^alpha.
  bool mollify = true;
};

/// Controlled equation: adds -div(sigma(rho) [exp(-A|x|^2/2)(g * kappa^alpha) +
/// sqrt(1 - exp(-A|x|^2)) gbar(t)]) dt.
Trajectory solve_controlled(const Field& initial, const NonlinearitySpec& spec, const NoiseParams& params,
                            const SolverConfig& config, const ControlField& control, double T,
                            std::uint64_t seed, ControlOptions options = {});

/// Number of steps and uniform step size used to reach T with steps no longer than dt.
std::pair<std::size_t, double> step_plan(double T, double dt);

/// Writes diagnostics as CSV: t, mass_excess, entropy, dissipation, dissipation_cum, min_rho, l1_to_reference.
void write_diagnostics_csv(const Trajectory& traj, std::ostream& out);

struct ItoCheck {
  /// max |div((Q/2) sigma'^2 grad rho) - (Q/8) Lap_h log rho| over cells
  double max_abs_diff = 0.0;
  double max_abs_term = 0.0;
};

/// For sigma = sqrt(xi): compares the implemented Stratonovich-correction divergence with
/// the log-Laplacian form on a positive field.
ItoCheck ito_correction_check(const Field& rho, const NonlinearitySpec& spec, double qv);

}  // namespace fluctuo
