#pragma once

#include <stdexcept>
#include <string>

namespace fluctuo {

/// Argument outside the mathematical domain of a function (negative density, M <= gamma, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid or inconsistent run configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Two fields or vector fields live on different grids.
class GridMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Time step exceeds the explicit stability bound; the step was not taken.
class CflViolation : public std::runtime_error {
 public:
  CflViolation(const std::string& what, double dt, double dt_max)
      : std::runtime_error(what), dt_(dt), dt_max_(dt_max) {}
  double dt() const noexcept { return dt_; }
  double dt_max() const noexcept { return dt_max_; }

 private:
  double dt_;
  double dt_max_;
};

/// Density dropped below -negativity_tol under the reject policy.
class NegativityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative solver failed to converge (degenerate weight, bad right-hand side).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fluctuo
