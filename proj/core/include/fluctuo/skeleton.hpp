#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <utility>

#include "fluctuo/control.hpp"
#include "fluctuo/nonlinearity.hpp"
#include "fluctuo/solver.hpp"

namespace fluctuo {

/// Skeleton equation d_t rho = Lap Phi(rho) - div(sigma(rho) g), explicit and conservative:
/// face flux grad Phi(rho) - sigma(rho_f) g_f. config.eps is ignored.
Trajectory solve_skeleton(const Field& initial, const NonlinearitySpec& spec, const ControlField& control, double T,
                          const SolverConfig& config);

/// Face control chosen from the current state, e.g. g = sigma(rho_f) grad phi.
using FeedbackPolicy = std::function<VectorField(double t, const Field& rho)>;

/// Skeleton solve with a state-feedback control. Returns the trajectory and the realized
/// control, one slice per time step.
std::pair<Trajectory, ControlField> solve_skeleton_feedback(const Field& initial, const NonlinearitySpec& spec,
                                                            const FeedbackPolicy& policy, double T,
                                                            const SolverConfig& config);

/// sigma(rho_f) * grad(phi) on faces, the feedback that makes g minimal-norm.
VectorField gradient_feedback(const Field& rho, const NonlinearitySpec& spec, const std::vector<double>& phi);

struct SkeletonEntropy {
  /// sup_t int Psi(rho) + int int |grad Phi^(1/2)(rho)|^2
  double lhs = 0.0;
  /// int Psi(rho_0) + int int |g|^2
  double rhs = 0.0;
  /// lhs / rhs; NaN when both vanish (see `degenerate`).
  double fitted_c = std::numeric_limits<double>::quiet_NaN();
  bool degenerate = false;
};

SkeletonEntropy skeleton_entropy_check(const Trajectory& traj, const ControlField& control, const EntropyFunction& ent);

/// Max over Gaussian test functions psi of
/// |int rho_T psi - int rho_0 psi - int_0^T (int Phi(rho) Lap psi + int sigma(rho) g . grad psi)|,
/// with exact derivatives of psi. Needs every step recorded.
double weak_form_residual(const Trajectory& traj, const ControlField& control, const NonlinearitySpec& spec,
                          std::size_t n_tests = 8, std::uint64_t seed = 1);

}  // namespace fluctuo
