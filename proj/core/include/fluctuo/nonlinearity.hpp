#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace fluctuo {

/// Shape-preserving piecewise cubic Hermite interpolant (Fritsch-Carlson slopes).
/// Monotone data produce a monotone interpolant.
class MonotoneCubic {
 public:
  MonotoneCubic(std::vector<double> x, std::vector<double> y);

  double value(double x) const;
  double derivative(double x) const;
  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }
  const std::vector<double>& nodes() const { return x_; }
  const std::vector<double>& values() const { return y_; }

 private:
  std::size_t interval(double x) const;

  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<double> slope_;
};

enum class NonlinearityFamily { power_law, tabulated };

/// The coefficient triple (Phi, sigma, nu) together with the far-field density gamma.
///
/// Power law: Phi = xi^m, sigma = xi^(m/2). Tabulated: Phi from a monotone table,
/// sigma = Phi^(1/2). In both cases nu = c_nu * Phi, applied identically in every
/// coordinate direction. Immutable after construction.
class NonlinearitySpec {
 public:
  static NonlinearitySpec power_law(double m, double gamma, double c_nu = 0.0);
  static NonlinearitySpec tabulated(std::vector<double> xi, std::vector<double> phi,
                                    double gamma, double c_nu = 0.0);
  /// Two-column CSV (xi, Phi(xi)); a header line is skipped when non-numeric.
  static NonlinearitySpec from_csv(const std::filesystem::path& path, double gamma,
                                   double c_nu = 0.0);

  NonlinearityFamily family() const { return family_; }
  double exponent() const { return m_; }
  double gamma() const { return gamma_; }
  double c_nu() const { return c_nu_; }
  const MonotoneCubic* table() const { return table_.get(); }
  /// Largest admissible argument (infinity for the power law).
  double xi_max() const;

  double phi(double xi) const;
  double phi_prime(double xi) const;
  double phi_sqrt(double xi) const;
  double sigma(double xi) const;
  /// sigma'(xi); singular at 0 when m < 2, callers floor the argument.
  double sigma_prime(double xi) const;
  double nu(double xi) const;

 private:
  NonlinearitySpec() = default;
  void check_arg(double xi) const;

  NonlinearityFamily family_ = NonlinearityFamily::power_law;
  double m_ = 1.0;
  double gamma_ = 1.0;
  double c_nu_ = 0.0;
  std::shared_ptr<const MonotoneCubic> table_;
};

/// Relative entropy Psi_{Phi,gamma,delta}: Psi(gamma) = 0 and
/// Psi'(xi) = log((Phi(xi) + delta) / Phi(gamma)).
///
/// delta = 0 gives the nonnegative convex entropy. For the power law with delta = 0
/// the closed form m (xi log(xi/gamma) - (xi - gamma)) is used, including its limit
/// m*gamma at xi = 0; everything else is integrated from gamma.
class EntropyFunction {
 public:
  explicit EntropyFunction(NonlinearitySpec spec, double delta = 0.0);

  const NonlinearitySpec& spec() const { return spec_; }
  double delta() const { return delta_; }

  double psi(double xi) const;
  double psi_prime(double xi) const;

 private:
  double integrate_from_gamma(double xi) const;

  NonlinearitySpec spec_;
  double delta_;
  // Tabulated family: Psi at the table nodes, so each evaluation integrates one panel.
  std::vector<double> node_psi_;
};

struct AssumptionItem {
  std::string name;
  double value = 0.0;      // empirical constant or exponent
  double threshold = 0.0;  // what `value` is compared against
  bool pass = false;
  std::string note;
};

struct AssumptionReport {
  std::vector<AssumptionItem> items;
  bool all_pass() const;
  const AssumptionItem* find(const std::string& name) const;
};

/// Empirical check of the structural hypotheses on (Phi, sigma, nu) over a grid of
/// sample points in (0, xi_max]. Every ratio is reported as the sup over the grid and
/// compared against `threshold`. Advisory only.
AssumptionReport check_assumptions(const NonlinearitySpec& spec, const std::vector<double>& xi_grid,
                                   double threshold = 100.0);

/// Geometric grid on [xi_min, xi_max] with n points; convenient input for check_assumptions.
std::vector<double> assumption_grid(double xi_min, double xi_max, std::size_t n);

}  // namespace fluctuo
