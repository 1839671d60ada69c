#pragma once

#include <cstddef>
#include <vector>

#include "fluctuo/grid.hpp"

namespace fluctuo {

/// out = -div(w grad x) with face weights w, periodic.
void apply_weighted_laplacian(const VectorField& w, const std::vector<double>& x, std::vector<double>& out);

struct PoissonResult {
  std::vector<double> phi;
  std::size_t iterations = 0;
  /// ||b - A phi|| / ||b|| at exit.
  double relative_residual = 0.0;
  bool converged = false;
  /// Relative residual after each iteration.
  std::vector<double> history;
};

struct PoissonOptions {
  double rel_tol = 1e-8;
  /// 0 means 10 * number of unknowns.
  std::size_t max_iter = 0;
  /// Throw SolverError when the tolerance is not met.
  bool throw_on_failure = true;
  /// Accepted |sum rhs| relative to sum |rhs| before the mean is projected out.
  double compatibility_tol = 1e-9;
};

/// Jacobi-preconditioned conjugate gradients for -div(w grad phi) = rhs on the
/// mean-zero subspace. The right-hand side must have (numerically) zero sum.
PoissonResult solve_weighted_poisson(const VectorField& w, const std::vector<double>& rhs,
                                     const PoissonOptions& options = {});

}  // namespace fluctuo
