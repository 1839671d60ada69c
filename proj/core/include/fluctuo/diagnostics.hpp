#pragma once

#include <string>
#include <vector>

#include "fluctuo/grid.hpp"
#include "fluctuo/nonlinearity.hpp"
#include "fluctuo/solver.hpp"

namespace fluctuo {

/// sum Psi(rho) h^d, negative values clamped to zero.
double entropy_of(const Field& field, const EntropyFunction& ent);
/// sum over faces of ((Phi^(1/2)(rho_j) - Phi^(1/2)(rho_i)) / h)^2 h^d.
double dissipation_of(const Field& field, const NonlinearitySpec& spec);

struct KineticIdentity {
  /// ||rho1 - rho2||_{L^1}
  double lhs = 0.0;
  /// sum h^d [rho1 + rho2 - 2 min(rho1, rho2)], the velocity integrals done in closed form
  double rhs = 0.0;
};

KineticIdentity kinetic_l1_identity(const Field& rho1, const Field& rho2);

/// Noise statistics entering the entropy budget.
struct EntropyBudgetInputs {
  double divqv_l1 = 0.0;
  double divqv_linf = 0.0;
  double A = 1.0;
  double theta = 1.0;
  double q = 1.0;
};

struct EntropyReport {
  int d = 1;
  std::size_t n_runs = 0;
  /// Ensemble means.
  double sup_entropy = 0.0;
  double cumulative_dissipation = 0.0;
  double lhs = 0.0;
  double initial_entropy = 0.0;
  double rhs_budget = 0.0;
  /// mean lhs / mean rhs
  double fitted_c = 0.0;
  /// Individual rhs terms: initial entropy, 1, then the noise terms in order.
  std::vector<double> rhs_terms;
  /// Time integral of the face dissipation weighted by 1/rho (reported only).
  double inverse_weighted_dissipation = 0.0;
};

/// Assembles sup_t int Psi(rho) + int int |grad Phi^(1/2)(rho)|^2 against the
/// dimension-specific budget built from int Psi(rho_0), eps<xi>_1 and the eps-scaled
/// divergence quadratic variation. Trajectories must carry per-step diagnostics.
EntropyReport entropy_estimate_check(const std::vector<Trajectory>& runs, const EntropyBudgetInputs& budget,
                                     const EntropyFunction& ent);
EntropyReport entropy_estimate_check(const Trajectory& run, const EntropyBudgetInputs& budget,
                                     const EntropyFunction& ent);

struct TailReport {
  double M = 0.0;
  std::size_t n_runs = 0;
  /// Time integral of the [M, M+1] dissipation, secant form on faces.
  double lhs = 0.0;
  /// int (rho_0 - M)_+ + int int eps <div xi>_1 1_[M,M+1](rho)
  double rhs = 0.0;
  /// Same with the Ito weight sigma(rho)^2 / 2 on the noise term.
  double rhs_ito = 0.0;
  double initial_excess = 0.0;
};

/// Measure-tail estimate. `divqv` is the cellwise divergence quadratic variation (may be
/// empty when eps = 0). Requires M > gamma and recorded states.
TailReport measure_tail(const Trajectory& traj, const NonlinearitySpec& spec, const Field& divqv, double M);
/// Ensemble means over runs.
TailReport measure_tail(const std::vector<Trajectory>& runs, const NonlinearitySpec& spec, const Field& divqv,
                        double M);

/// lhs of measure_tail alone, without the M > gamma restriction.
double tail_dissipation(const Trajectory& traj, const NonlinearitySpec& spec, double M);

struct VanishingReport {
  std::vector<double> M;
  std::vector<double> lhs;
  bool monotone = false;
  bool pass = false;
  double threshold = 0.0;
};

/// lhs(M) over an increasing list; passes when non-increasing and the last value is
/// at most `threshold`.
VanishingReport vanishing_at_infinity_check(const Trajectory& traj, const NonlinearitySpec& spec,
                                            const std::vector<double>& M_list, double threshold = 1e-8);

}  // namespace fluctuo
