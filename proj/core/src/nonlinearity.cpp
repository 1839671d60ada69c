#include "fluctuo/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "fluctuo/errors.hpp"

namespace fluctuo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double pchip_end_slope(double h0, double h1, double d0, double d1) {
  double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
  if (std::signbit(s) != std::signbit(d0)) {
    s = 0.0;
  } else if (std::signbit(d0) != std::signbit(d1) && std::abs(s) > std::abs(3.0 * d0)) {
    s = 3.0 * d0;
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// MonotoneCubic

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  if (x_.size() != y_.size() || x_.size() < 2) {
    throw ConfigError("monotone cubic: need at least two (x, y) pairs of equal length");
  }
  for (std::size_t i = 1; i < x_.size(); ++i) {
    if (!(x_[i] > x_[i - 1])) throw ConfigError("monotone cubic: nodes must be strictly increasing");
  }
  const std::size_t n = x_.size();
  std::vector<double> h(n - 1), d(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x_[i + 1] - x_[i];
    d[i] = (y_[i + 1] - y_[i]) / h[i];
  }
  slope_.assign(n, 0.0);
  if (n == 2) {
    slope_[0] = slope_[1] = d[0];
    return;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (d[i - 1] * d[i] <= 0.0) {
      slope_[i] = 0.0;
    } else {
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      slope_[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
    }
  }
  slope_[0] = pchip_end_slope(h[0], h[1], d[0], d[1]);
  slope_[n - 1] = pchip_end_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
}

std::size_t MonotoneCubic::interval(double x) const {
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t k = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
  return std::min(k, x_.size() - 2);
}

double MonotoneCubic::value(double x) const {
  const std::size_t k = interval(x);
  const double h = x_[k + 1] - x_[k];
  const double t = (x - x_[k]) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * y_[k] + (t3 - 2 * t2 + t) * h * slope_[k] +
         (-2 * t3 + 3 * t2) * y_[k + 1] + (t3 - t2) * h * slope_[k + 1];
}

double MonotoneCubic::derivative(double x) const {
  const std::size_t k = interval(x);
  const double h = x_[k + 1] - x_[k];
  const double t = (x - x_[k]) / h;
  const double t2 = t * t;
  return ((6 * t2 - 6 * t) * y_[k] + (6 * t - 6 * t2) * y_[k + 1]) / h +
         (3 * t2 - 4 * t + 1) * slope_[k] + (3 * t2 - 2 * t) * slope_[k + 1];
}

// ---------------------------------------------------------------------------
// NonlinearitySpec

NonlinearitySpec NonlinearitySpec::power_law(double m, double gamma, double c_nu) {
  if (!(m >= 1.0) || !std::isfinite(m)) throw ConfigError("power law exponent m must be >= 1");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be > 0");
  if (!(c_nu >= 0.0)) throw ConfigError("c_nu must be >= 0");
  NonlinearitySpec s;
  s.family_ = NonlinearityFamily::power_law;
  s.m_ = m;
  s.gamma_ = gamma;
  s.c_nu_ = c_nu;
  return s;
}

NonlinearitySpec NonlinearitySpec::tabulated(std::vector<double> xi, std::vector<double> phi,
                                             double gamma, double c_nu) {
  if (xi.size() != phi.size() || xi.size() < 3) {
    throw ConfigError("tabulated nonlinearity needs at least three (xi, Phi) rows");
  }
  if (xi.front() != 0.0 || phi.front() != 0.0) {
    throw ConfigError("tabulated nonlinearity must start at (0, 0)");
  }
  for (std::size_t i = 1; i < xi.size(); ++i) {
    if (!(xi[i] > xi[i - 1])) throw ConfigError("tabulated nonlinearity: xi must be strictly increasing");
    if (phi[i] < phi[i - 1]) throw ConfigError("tabulated nonlinearity: Phi table is not monotone");
  }
  if (!(gamma > 0.0) || gamma > xi.back()) throw ConfigError("gamma must lie inside the table range");
  if (!(c_nu >= 0.0)) throw ConfigError("c_nu must be >= 0");
  NonlinearitySpec s;
  s.family_ = NonlinearityFamily::tabulated;
  s.gamma_ = gamma;
  s.c_nu_ = c_nu;
  s.table_ = std::make_shared<const MonotoneCubic>(std::move(xi), std::move(phi));
  if (!(s.phi(gamma) > 0.0)) throw ConfigError("Phi(gamma) must be positive");
  // Growth exponent used by the assumption checker: secant slope over the last decade.
  const auto& x = s.table_->nodes();
  const auto& y = s.table_->values();
  const std::size_t n = x.size();
  std::size_t j = n - 2;
  while (j > 1 && x[j] > 0.1 * x[n - 1]) --j;
  s.m_ = (y[j] > 0.0 && y[n - 1] > y[j])
             ? std::max(1.0, std::log(y[n - 1] / y[j]) / std::log(x[n - 1] / x[j]))
             : 1.0;
  return s;
}

NonlinearitySpec NonlinearitySpec::from_csv(const std::filesystem::path& path, double gamma,
                                            double c_nu) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open nonlinearity table: " + path.string());
  std::vector<double> xi, phi;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double a = 0.0, b = 0.0;
    if (!(ss >> a >> b)) {
      if (xi.empty() && lineno == 1) continue;  // header
      throw ConfigError("malformed row " + std::to_string(lineno) + " in " + path.string());
    }
    xi.push_back(a);
    phi.push_back(b);
  }
  return tabulated(std::move(xi), std::move(phi), gamma, c_nu);
}

double NonlinearitySpec::xi_max() const {
  return family_ == NonlinearityFamily::power_law ? kInf : table_->x_max();
}

void NonlinearitySpec::check_arg(double xi) const {
  if (!(xi >= 0.0)) throw DomainError("nonlinearity evaluated at negative or NaN argument");
  if (family_ == NonlinearityFamily::tabulated && xi > table_->x_max() * (1.0 + 1e-12)) {
    throw DomainError("nonlinearity evaluated outside its tabulated range");
  }
}

double NonlinearitySpec::phi(double xi) const {
  check_arg(xi);
  if (family_ == NonlinearityFamily::power_law) return m_ == 1.0 ? xi : std::pow(xi, m_);
  return std::max(0.0, table_->value(xi));
}

double NonlinearitySpec::phi_prime(double xi) const {
  check_arg(xi);
  if (family_ == NonlinearityFamily::power_law) {
    return m_ == 1.0 ? 1.0 : m_ * std::pow(xi, m_ - 1.0);
  }
  return std::max(0.0, table_->derivative(xi));
}

double NonlinearitySpec::phi_sqrt(double xi) const {
  check_arg(xi);
  if (family_ == NonlinearityFamily::power_law) {
    if (m_ == 2.0) return xi;
    return m_ == 1.0 ? std::sqrt(xi) : std::pow(xi, 0.5 * m_);
  }
  return std::sqrt(phi(xi));
}

double NonlinearitySpec::sigma(double xi) const { return phi_sqrt(xi); }

double NonlinearitySpec::sigma_prime(double xi) const {
  check_arg(xi);
  if (family_ == NonlinearityFamily::power_law) {
    if (m_ == 2.0) return 1.0;
    if (xi == 0.0) return m_ < 2.0 ? kInf : 0.0;
    return 0.5 * m_ * std::pow(xi, 0.5 * m_ - 1.0);
  }
  const double p = phi(xi);
  const double dp = phi_prime(xi);
  if (p == 0.0) return dp > 0.0 ? kInf : 0.0;
  return dp / (2.0 * std::sqrt(p));
}

double NonlinearitySpec::nu(double xi) const { return c_nu_ == 0.0 ? 0.0 : c_nu_ * phi(xi); }

// ---------------------------------------------------------------------------
// EntropyFunction

EntropyFunction::EntropyFunction(NonlinearitySpec spec, double delta)
    : spec_(std::move(spec)), delta_(delta) {
  if (!(delta_ >= 0.0)) throw ConfigError("entropy regularization delta must be >= 0");
  if (spec_.family() == NonlinearityFamily::tabulated) {
    const auto& x = spec_.table()->nodes();
    node_psi_.resize(x.size());
    // Integrate panel by panel outward from gamma.
    const double g = spec_.gamma();
    auto k = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), g) - x.begin());
    // x[k-1] <= g < x[k]
    const auto panel = [&](double a, double b) {
      if (a == b) return 0.0;
      const auto f = [&](double s) { return psi_prime(s); };
      if (a == 0.0 && delta_ == 0.0) {
        boost::math::quadrature::tanh_sinh<double> ts;
        return ts.integrate(f, a, b);
      }
      return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 10, 1e-13);
    };
    if (k < x.size()) node_psi_[k] = panel(g, x[k]);
    for (std::size_t j = k + 1; j < x.size(); ++j) node_psi_[j] = node_psi_[j - 1] + panel(x[j - 1], x[j]);
    if (k >= 1) {
      node_psi_[k - 1] = -panel(x[k - 1], g);
      for (std::size_t j = k - 1; j-- > 0;) node_psi_[j] = node_psi_[j + 1] - panel(x[j], x[j + 1]);
    }
  }
}

double EntropyFunction::psi_prime(double xi) const {
  const double num = spec_.phi(xi) + delta_;
  if (num == 0.0) return -kInf;
  return std::log(num / spec_.phi(spec_.gamma()));
}

double EntropyFunction::psi(double xi) const {
  if (!(xi >= 0.0)) throw DomainError("entropy evaluated at negative or NaN argument");
  const double g = spec_.gamma();
  if (spec_.family() == NonlinearityFamily::power_law && delta_ == 0.0) {
    const double m = spec_.exponent();
    if (xi == 0.0) return m * g;
    return m * (xi * std::log(xi / g) - (xi - g));
  }
  if (xi == g) return 0.0;
  return integrate_from_gamma(xi);
}

double EntropyFunction::integrate_from_gamma(double xi) const {
  const auto f = [&](double s) { return psi_prime(s); };
  if (spec_.family() == NonlinearityFamily::power_law) {
    const double g = spec_.gamma();
    const double lo = std::min(xi, g), hi = std::max(xi, g);
    const double v =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 15, 1e-13);
    return xi > g ? v : -v;
  }
  spec_.phi(xi);  // range check
  const auto& x = spec_.table()->nodes();
  auto k = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), xi) - x.begin());
  if (k == 0) k = 1;
  if (k >= x.size()) k = x.size() - 1;
  // x[k-1] <= xi <= x[k]
  if (k == 1 && delta_ == 0.0) {
    if (xi == x[1]) return node_psi_[1];
    try {
      boost::math::quadrature::tanh_sinh<double> ts;
      return node_psi_[1] - ts.integrate(f, xi, x[1]);
    } catch (const std::exception&) {
      return kInf;
    }
  }
  return node_psi_[k - 1] +
         boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, x[k - 1], xi, 10, 1e-13);
}

// ---------------------------------------------------------------------------
// Assumption checks

bool AssumptionReport::all_pass() const {
  return std::all_of(items.begin(), items.end(), [](const AssumptionItem& i) { return i.pass; });
}

const AssumptionItem* AssumptionReport::find(const std::string& name) const {
  for (const auto& i : items) {
    if (i.name == name) return &i;
  }
  return nullptr;
}

std::vector<double> assumption_grid(double xi_min, double xi_max, std::size_t n) {
  if (!(xi_min > 0.0) || !(xi_max > xi_min) || n < 2) {
    throw ConfigError("assumption grid needs 0 < xi_min < xi_max and n >= 2");
  }
  std::vector<double> g(n);
  const double r = std::log(xi_max / xi_min) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) g[i] = xi_min * std::exp(r * static_cast<double>(i));
  g.back() = xi_max;
  return g;
}

namespace {

double safe_ratio(double num, double den) {
  if (den > 0.0) return num / den;
  return num > 0.0 ? kInf : 0.0;
}

}  // namespace

AssumptionReport check_assumptions(const NonlinearitySpec& spec, const std::vector<double>& xi_grid,
                                   double threshold) {
  std::vector<double> xs;
  for (double x : xi_grid) {
    if (x > 0.0 && x <= spec.xi_max()) xs.push_back(x);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  if (xs.size() < 4) throw ConfigError("assumption grid needs at least four points in (0, xi_max]");

  AssumptionReport rep;
  const auto add = [&](std::string name, double value, double thr, bool pass, std::string note = {}) {
    rep.items.push_back({std::move(name), value, thr, pass, std::move(note)});
  };
  const double m_exp = spec.exponent();
  const double gamma = spec.gamma();

  double min_dphi = kInf;
  bool strictly = true;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    min_dphi = std::min(min_dphi, spec.phi_prime(xs[i]));
    if (i > 0 && !(spec.phi(xs[i]) > spec.phi(xs[i - 1]))) strictly = false;
  }
  add("phi_strictly_increasing", min_dphi, 0.0, strictly && min_dphi > 0.0, "min Phi' over grid");

  // Points in the lowest tenth of the grid count as "near zero".
  const std::size_t n_near = std::max<std::size_t>(3, xs.size() / 10);
  double s_near = 0.0;
  for (std::size_t i = 0; i < n_near; ++i) {
    const double s = spec.sigma(xs[i]);
    s_near = std::max(s_near, s * s / xs[i]);
  }
  add("sigma_sq_over_xi_near_zero", s_near, threshold, s_near <= threshold);

  double r = 0.0;
  for (double x : xs) r = std::max(r, safe_ratio(spec.phi(x), x * spec.phi_prime(x)));
  add("phi_over_xi_phi_prime", r, threshold, r <= threshold);

  double run_s = 0.0, run_n = 0.0, sup_s = 0.0, sup_n = 0.0;
  for (double x : xs) {
    const double s2 = spec.sigma(x) * spec.sigma(x);
    const double nv = std::abs(spec.nu(x));
    run_s = std::max(run_s, s2);
    run_n = std::max(run_n, nv);
    sup_s = std::max(sup_s, run_s / (1.0 + x + s2));
    sup_n = std::max(sup_n, run_n / (1.0 + x + nv));
  }
  add("sigma_sq_running_sup", sup_s, threshold, sup_s >= 0.0 && sup_s <= threshold);
  add("nu_running_sup", sup_n, threshold, sup_n <= threshold);

  // Polynomial growth Phi <= c (1 + xi^p).
  const std::size_t nx = xs.size();
  std::size_t j = nx - 2;
  while (j > 0 && xs[j] > 0.1 * xs[nx - 1]) --j;
  const double p_fit = (spec.phi(xs[j]) > 0.0)
                           ? std::log(spec.phi(xs[nx - 1]) / spec.phi(xs[j])) / std::log(xs[nx - 1] / xs[j])
                           : 1.0;
  const double p = std::max(1.0, std::ceil(p_fit * 100.0 - 1e-9) / 100.0);
  double c_growth = 0.0;
  for (double x : xs) c_growth = std::max(c_growth, spec.phi(x) / (1.0 + std::pow(x, p)));
  add("phi_polynomial_growth", c_growth, threshold, c_growth <= threshold,
      "p = " + std::to_string(p));

  // Local integrability of log Phi on the part of the grid inside (0, 1].
  double log_int = 0.0;
  double prev_x = 0.0;
  double prev_f = -1.0;
  for (double x : xs) {
    if (x > 1.0) break;
    const double f = std::abs(std::log(spec.phi(x)));
    if (!std::isfinite(f)) {
      log_int = kInf;
      break;
    }
    // First panel from 0: treat |log Phi| as integrable singularity ~ the value at x times x.
    log_int += prev_f < 0.0 ? f * x : 0.5 * (f + prev_f) * (x - prev_x);
    prev_x = x;
    prev_f = f;
  }
  add("log_phi_local_integrability", log_int, threshold, std::isfinite(log_int) && log_int <= threshold);

  // |Phi^1/2(xi) - Phi^1/2(clamp(xi))| <= c1 |xi - clamp(xi)|^(m/2) + c2 1{|xi-gamma| >= gamma/2}
  double c1 = 0.0, c2 = 0.0;
  for (double x : xs) {
    const double cl = std::clamp(x, 0.5 * gamma, 1.5 * gamma);
    const double dx = std::abs(x - cl);
    if (dx == 0.0) continue;
    const double lhs = std::abs(spec.phi_sqrt(x) - spec.phi_sqrt(cl));
    if (dx <= 1.0) {
      c2 = std::max(c2, lhs);
    } else {
      c1 = std::max(c1, lhs / std::pow(dx, 0.5 * m_exp));
    }
  }
  add("phi_sqrt_clamp_c1", c1, threshold, c1 <= threshold, "exponent m/2 = " + std::to_string(0.5 * m_exp));
  add("phi_sqrt_clamp_c2", c2, threshold, c2 <= threshold);

  // Degeneracy: either Phi'/Phi^1/2 <= c xi^-theta, or |xi-xi'|^q <= c |Phi^1/2(xi)-Phi^1/2(xi')|^2.
  double best_c = kInf, best_theta = 0.0;
  for (int k = 0; k <= 10; ++k) {
    const double theta = 0.05 * k;
    double c = 0.0;
    for (double x : xs) c = std::max(c, safe_ratio(spec.phi_prime(x) * std::pow(x, theta), spec.phi_sqrt(x)));
    if (c < best_c) {
      best_c = c;
      best_theta = theta;
    }
  }
  const bool branch_a = best_c <= threshold;
  add("phi_prime_over_phi_sqrt", best_c, threshold, branch_a, "theta = " + std::to_string(best_theta));
  const double q_coer = std::max(2.0, m_exp);
  double c_coer = 0.0;
  for (std::size_t a = 0; a < nx; ++a) {
    for (std::size_t b = a + 1; b < nx; ++b) {
      const double d = spec.phi_sqrt(xs[b]) - spec.phi_sqrt(xs[a]);
      c_coer = std::max(c_coer, safe_ratio(std::pow(xs[b] - xs[a], q_coer), d * d));
    }
  }
  const bool branch_b = c_coer <= threshold;
  add("phi_sqrt_coercivity", c_coer, threshold, branch_b, "q = " + std::to_string(q_coer));
  add("degeneracy_either_branch", branch_a || branch_b ? 1.0 : 0.0, 1.0, branch_a || branch_b);

  double sig_ratio = 0.0, nu_ratio = 0.0;
  for (double x : xs) {
    sig_ratio = std::max(sig_ratio, safe_ratio(std::abs(spec.sigma(x)), spec.phi_sqrt(x)));
    nu_ratio = std::max(nu_ratio, safe_ratio(std::abs(spec.nu(x)), spec.phi(x)));
  }
  add("sigma_over_phi_sqrt", sig_ratio, threshold, sig_ratio <= threshold);
  add("nu_over_phi", nu_ratio, threshold, nu_ratio <= threshold);

  // Phi' <= c (1 + Phi^(q/2)) with q in [0, 2): smallest q on a 0.05 lattice.
  double q_found = -1.0, c_found = kInf;
  for (int k = 0; k < 40; ++k) {
    const double q = 0.05 * k;
    double c = 0.0;
    for (double x : xs) c = std::max(c, spec.phi_prime(x) / (1.0 + std::pow(spec.phi_sqrt(x), q)));
    if (c <= threshold) {
      q_found = q;
      c_found = c;
      break;
    }
  }
  add("phi_prime_subquadratic", c_found, threshold, q_found >= 0.0,
      q_found >= 0.0 ? "q = " + std::to_string(q_found) : "no q in [0,2) found");

  // Skeleton well-posedness: Phi^1/2 concave with (Phi^1/2/Phi')^2 <= c (xi+1), or convex with
  // bounded doubling ratio and bounded Phi^1/2/Phi' away from zero.
  bool concave = true, convex = true;
  for (std::size_t i = 1; i + 1 < nx; ++i) {
    const double x0 = xs[i - 1], x1 = xs[i], x2 = xs[i + 1];
    const double s0 = (spec.phi_sqrt(x1) - spec.phi_sqrt(x0)) / (x1 - x0);
    const double s1 = (spec.phi_sqrt(x2) - spec.phi_sqrt(x1)) / (x2 - x1);
    const double tol = 1e-9 * (std::abs(s0) + std::abs(s1));
    if (s1 > s0 + tol) concave = false;
    if (s1 < s0 - tol) convex = false;
  }
  double conc_c = 0.0;
  for (double x : xs) {
    const double v = safe_ratio(spec.phi_sqrt(x), spec.phi_prime(x));
    conc_c = std::max(conc_c, v * v / (x + 1.0));
  }
  double doubling = 0.0, away = 0.0;
  for (double x : xs) {
    if (x >= 1.0 && x + 1.0 <= spec.xi_max()) doubling = std::max(doubling, spec.phi(x + 1.0) / spec.phi(x));
    if (x >= 0.5) away = std::max(away, safe_ratio(spec.phi_sqrt(x), spec.phi_prime(x)));
  }
  const bool eq_concave = concave && conc_c <= threshold;
  const bool eq_convex = convex && doubling <= threshold && away <= threshold;
  add("phi_sqrt_concave_branch", conc_c, threshold, eq_concave, concave ? "concave" : "not concave");
  add("phi_sqrt_convex_branch", std::max(doubling, away), threshold, eq_convex,
      convex ? "convex" : "not convex");
  add("skeleton_either_branch", eq_concave || eq_convex ? 1.0 : 0.0, 1.0, eq_concave || eq_convex);

  return rep;
}

}  // namespace fluctuo
