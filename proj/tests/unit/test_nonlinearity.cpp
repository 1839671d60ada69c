#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fluctuo/errors.hpp"
#include "fluctuo/nonlinearity.hpp"

using namespace fluctuo;

namespace {

// Composite Simpson rule, used as an independent reference for entropy integrals.
template <typename F>
double simpson(F f, double a, double b, int n = 2000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("power law coefficients") {
  const auto m2 = NonlinearitySpec::power_law(2.0, 1.0);
  CHECK(m2.phi(3.0) == doctest::Approx(9.0));
  CHECK(m2.phi(0.0) == 0.0);
  CHECK(m2.sigma(0.0) == 0.0);
  CHECK(m2.nu(0.0) == 0.0);
  const auto m1 = NonlinearitySpec::power_law(1.0, 1.0);
  CHECK(m1.sigma(4.0) == doctest::Approx(2.0));
  CHECK(NonlinearitySpec::power_law(3.5, 1.0).phi(0.0) == 0.0);

  const auto m3 = NonlinearitySpec::power_law(3.0, 2.0, 0.5);
  CHECK(m3.nu(2.0) == doctest::Approx(0.5 * 8.0));
  CHECK(m3.phi_prime(2.0) == doctest::Approx(12.0));
  CHECK(m3.sigma_prime(4.0) == doctest::Approx(1.5 * 2.0));
  CHECK(m1.sigma_prime(4.0) == doctest::Approx(0.25));
}

TEST_CASE("phi_sqrt squared equals phi for power laws") {
  for (double m : {1.0, 1.5, 2.0, 3.0, 4.7}) {
    const auto s = NonlinearitySpec::power_law(m, 1.0);
    for (double x : {1e-6, 0.1, 0.7, 1.0, 3.3, 42.0}) {
      const double r = s.phi_sqrt(x);
      CHECK(r * r == doctest::Approx(s.phi(x)).epsilon(1e-14));
    }
  }
}

TEST_CASE("domain and construction errors") {
  const auto s = NonlinearitySpec::power_law(2.0, 1.0);
  CHECK_THROWS_AS(s.phi(-1.0), DomainError);
  CHECK_THROWS_AS(s.sigma(-1e-3), DomainError);
  CHECK_THROWS_AS(NonlinearitySpec::power_law(0.5, 1.0), ConfigError);
  CHECK_THROWS_AS(NonlinearitySpec::power_law(2.0, 0.0), ConfigError);
  CHECK_THROWS_AS(NonlinearitySpec::tabulated({0.0, 1.0, 2.0, 3.0}, {0.0, 1.0, 0.5, 2.0}, 1.0), ConfigError);
  const auto t = NonlinearitySpec::tabulated({0.0, 1.0, 2.0, 3.0}, {0.0, 1.0, 4.0, 9.0}, 1.0);
  CHECK_THROWS_AS(t.phi(3.5), DomainError);
  CHECK(t.phi(2.0) == doctest::Approx(4.0));
}

TEST_CASE("monotone cubic interpolant") {
  std::vector<double> x = {0.0, 0.5, 1.0, 1.1, 3.0, 3.2, 6.0};
  std::vector<double> y = {0.0, 0.1, 0.1, 2.0, 2.1, 5.0, 5.0};
  const MonotoneCubic mc(x, y);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(mc.value(x[i]) == doctest::Approx(y[i]));
  double prev = mc.value(0.0);
  for (int i = 1; i <= 6000; ++i) {
    const double v = mc.value(i * 1e-3);
    CHECK(v >= prev - 1e-14);
    prev = v;
  }
  // Flat data stays flat.
  for (double s = 0.5; s <= 1.0; s += 0.05) CHECK(mc.value(s) == doctest::Approx(0.1));
}

TEST_CASE("entropy closed form examples") {
  const EntropyFunction e1(NonlinearitySpec::power_law(1.0, 1.0));
  CHECK(e1.psi(1.0) == 0.0);
  CHECK(e1.psi(0.0) == doctest::Approx(1.0));
  const EntropyFunction e2(NonlinearitySpec::power_law(2.0, 1.0));
  const double ref = simpson([](double s) { return 2.0 * std::log(s); }, 1.0, std::numbers::e);
  CHECK(ref == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(e2.psi(std::numbers::e) == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("entropy convexity, positivity and derivative") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, 8.0), L(0.0, 1.0);
  for (double m : {1.0, 2.0, 3.0}) {
    for (double gamma : {0.5, 1.0, 2.0}) {
      const EntropyFunction e(NonlinearitySpec::power_law(m, gamma));
      CHECK(e.psi(gamma) == 0.0);
      for (int i = 0; i < 200; ++i) {
        const double a = U(rng), b = U(rng), l = L(rng);
        const double mid = e.psi(l * a + (1 - l) * b);
        CHECK(mid <= l * e.psi(a) + (1 - l) * e.psi(b) + 1e-12);
        CHECK(e.psi(a) >= 0.0);
      }
      for (double x : {0.3, 0.9, 1.7, 5.0}) {
        const double h = 1e-5 * x;
        const double fd = (e.psi(x + h) - e.psi(x - h)) / (2 * h);
        const double exact = std::log(e.spec().phi(x) / e.spec().phi(gamma));
        CHECK(std::abs(fd - exact) <= 1e-6 * std::max(1.0, std::abs(exact)));
      }
    }
  }
}

TEST_CASE("regularized entropy") {
  const double delta = 0.5;
  const EntropyFunction e(NonlinearitySpec::power_law(1.0, 1.0), delta);
  CHECK(e.psi(1.0) == 0.0);
  CHECK(e.psi(0.9) < 0.0);
  for (double x : {0.0, 0.4, 2.0, 6.0}) {
    const double ref = simpson([&](double s) { return std::log(s + delta); }, 1.0, x);
    CHECK(e.psi(x) == doctest::Approx(ref).epsilon(1e-9));
  }
  CHECK(e.psi_prime(2.0) == doctest::Approx(std::log(2.5)));
}

TEST_CASE("tabulated entropy by quadrature") {
  // Phi = xi^2 sampled on a fine table; compare with the closed form of the power law.
  std::vector<double> xi, phi;
  for (int i = 0; i <= 400; ++i) {
    const double x = 0.025 * i;
    xi.push_back(x);
    phi.push_back(x * x);
  }
  const EntropyFunction tab(NonlinearitySpec::tabulated(xi, phi, 1.0));
  const EntropyFunction exact(NonlinearitySpec::power_law(2.0, 1.0));
  CHECK(tab.psi(1.0) == 0.0);
  for (double x : {0.3, 0.99, 2.5, 7.3, 10.0}) {
    CHECK(tab.psi(x) == doctest::Approx(exact.psi(x)).epsilon(1e-4));
  }
  // The interpolant is only linear in the first table cell, so log Phi loses its 2 log xi singularity there.
  for (double x : {0.0, 0.01}) CHECK(tab.psi(x) == doctest::Approx(exact.psi(x)).epsilon(5e-3));
  for (int i = 0; i < 50; ++i) {
    const double a = 0.2 * i, b = 0.2 * i + 0.1;
    CHECK(tab.psi(0.5 * (a + b)) <= 0.5 * (tab.psi(a) + tab.psi(b)) + 1e-12);
  }
}

TEST_CASE("csv table loading") {
  const auto path = std::filesystem::temp_directory_path() / "fluctuo_phi_table.csv";
  {
    std::ofstream out(path);
    out << "xi,phi\n0,0\n1,1\n2,8\n3,27\n";
  }
  const auto s = NonlinearitySpec::from_csv(path, 1.0);
  CHECK(s.family() == NonlinearityFamily::tabulated);
  CHECK(s.phi(2.0) == doctest::Approx(8.0));
  CHECK(s.xi_max() == 3.0);
  std::filesystem::remove(path);
}

TEST_CASE("assumption checks") {
  const auto grid = assumption_grid(1e-4, 50.0, 200);
  const auto r2 = check_assumptions(NonlinearitySpec::power_law(2.0, 1.0), grid);
  const auto* ratio = r2.find("phi_over_xi_phi_prime");
  REQUIRE(ratio != nullptr);
  CHECK(ratio->value == doctest::Approx(0.5));
  CHECK(ratio->pass);
  CHECK(r2.find("phi_strictly_increasing")->pass);
  CHECK(r2.find("skeleton_either_branch")->pass);

  const auto r1 = check_assumptions(NonlinearitySpec::power_law(1.0, 1.0), grid);
  CHECK(r1.find("sigma_sq_over_xi_near_zero")->value == doctest::Approx(1.0));
  CHECK(r1.find("sigma_sq_over_xi_near_zero")->pass);
  CHECK(r1.find("degeneracy_either_branch")->pass);

  const auto flat = NonlinearitySpec::tabulated({0.0, 1.0, 2.0, 3.0, 4.0}, {0.0, 1.0, 1.0, 2.0, 3.0}, 1.0);
  const auto rf = check_assumptions(flat, assumption_grid(1e-3, 4.0, 100));
  CHECK_FALSE(rf.find("phi_strictly_increasing")->pass);
  CHECK_FALSE(rf.all_pass());
}
