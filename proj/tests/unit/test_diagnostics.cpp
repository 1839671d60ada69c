#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fluctuo/diagnostics.hpp"
#include "fluctuo/errors.hpp"

using namespace fluctuo;

namespace {

Field bump_field(const Grid& g, double base, double peak, double width) {
  Field f(g, 1.0, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double r2 = 0.0;
    for (int k = 0; k < g.d; ++k) r2 += g.center(i, k) * g.center(i, k);
    f[i] = base + peak * std::exp(-r2 / (2 * width * width));
  }
  return f;
}

}  // namespace

TEST_CASE("entropy and dissipation of simple fields") {
  const Grid g(1, 32, 1.0);
  const EntropyFunction ent(NonlinearitySpec::power_law(2.0, 1.0));
  CHECK(entropy_of(Field(g, 1.0, 1.0), ent) == 0.0);
  CHECK(entropy_of(Field(g, 1.0, std::numbers::e), ent) == doctest::Approx(2.0 * 2.0));
  CHECK(dissipation_of(Field(g, 1.0, 3.0), ent.spec()) == 0.0);

  // Direct evaluation for Phi^(1/2)(xi) = xi.
  Field f(g, 1.0, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = 1.0 + 0.1 * static_cast<double>(i % 5);
  double ref = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double d = (f[(i + 1) % g.size()] - f[i]) / g.h();
    ref += d * d * g.h();
  }
  CHECK(dissipation_of(f, ent.spec()) == doctest::Approx(ref).epsilon(1e-14));
}

TEST_CASE("kinetic identity against a velocity-space quadrature") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 3.0);
  const Grid g(2, 8, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Field a(g, 1.0, 0.0), b(g, 1.0, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      a[i] = U(rng);
      b[i] = U(rng);
    }
    const auto id = kinetic_l1_identity(a, b);
    CHECK(std::abs(id.lhs - id.rhs) <= 1e-12 * id.lhs);
    if (trial < 5) {
      // int (1_{xi < a} - 1_{xi < b})^2 dxi by midpoint rule.
      const int n = 30000;
      double q = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        for (int s = 0; s < n; ++s) {
          const double xi = (s + 0.5) * 3.0 / n;
          const double diff = (xi < a[i] ? 1.0 : 0.0) - (xi < b[i] ? 1.0 : 0.0);
          q += diff * diff * 3.0 / n;
        }
      }
      CHECK(id.rhs == doctest::Approx(q * g.cell_volume()).epsilon(1e-3));
    }
  }
  Field neg(g, 1.0, 1.0);
  neg[0] = -0.1;
  CHECK_THROWS_AS(kinetic_l1_identity(neg, Field(g, 1.0, 1.0)), DomainError);
}

TEST_CASE("deterministic entropy decay and budget") {
  const Grid g(1, 64, 2.0);
  const auto spec = NonlinearitySpec::power_law(2.0, 1.0);
  const EntropyFunction ent(spec);
  SolverConfig cfg;
  cfg.dt = 1e-4;
  const Trajectory tr = solve(bump_field(g, 1.0, 1.5, 0.3), spec, NoiseParams{}, cfg, 0.1, 1);
  for (std::size_t n = 1; n < tr.diagnostics.size(); ++n) {
    CHECK(tr.diagnostics[n].entropy <= tr.diagnostics[n - 1].entropy + 1e-8 * cfg.dt);
  }
  const EntropyReport rep = entropy_estimate_check(tr, EntropyBudgetInputs{}, ent);
  CHECK(rep.rhs_terms.size() == 5);
  CHECK(rep.rhs_terms[0] == doctest::Approx(tr.diagnostics.front().entropy));
  CHECK(rep.rhs_terms[1] == 1.0);
  CHECK(rep.rhs_terms[2] == 0.0);
  CHECK(rep.sup_entropy == doctest::Approx(rep.initial_entropy));
  // Continuum balance: Psi(rho_0) = Psi(rho_T) + 4 int |grad Phi^(1/2)|^2.
  const double balance = tr.diagnostics.back().entropy + 4.0 * rep.cumulative_dissipation;
  CHECK(balance == doctest::Approx(rep.initial_entropy).epsilon(0.05));
  CHECK(rep.lhs <= rep.rhs_budget);
  CHECK(rep.fitted_c == doctest::Approx(rep.lhs / rep.rhs_budget));
  CHECK(rep.inverse_weighted_dissipation > 0.0);
}

TEST_CASE("entropy budget terms in two dimensions") {
  const Grid g(2, 16, 2.0);
  Trajectory tr;
  tr.grid = g;
  tr.eps = 0.5;
  tr.a_norm_sq = 4.0;
  StepDiagnostics d0;
  d0.entropy = 3.0;
  StepDiagnostics d1 = d0;
  d1.t = 1.0;
  d1.entropy = 2.0;
  d1.dissipation_cum = 0.25;
  tr.diagnostics = {d0, d1};
  const EntropyBudgetInputs b{.divqv_l1 = 6.0, .divqv_linf = 8.0, .A = 4.0, .theta = 0.5, .q = 1.0};
  const auto rep = entropy_estimate_check(tr, b, EntropyFunction(NonlinearitySpec::power_law(2.0, 1.0)));
  REQUIRE(rep.rhs_terms.size() == 6);
  CHECK(rep.rhs_terms[2] == doctest::Approx(std::sqrt(2.0) / 2.0));
  CHECK(rep.rhs_terms[3] == doctest::Approx(0.5));
  CHECK(rep.rhs_terms[4] == doctest::Approx(3.0));
  CHECK(rep.rhs_terms[5] == doctest::Approx(2.0));
  CHECK(rep.lhs == doctest::Approx(3.25));
  CHECK(rep.rhs_budget == doctest::Approx(3.0 + 1.0 + std::sqrt(2.0) / 2.0 + 0.5 + 3.0 + 2.0));

  Trajectory t1 = tr;
  t1.grid = Grid(1, 16, 2.0);
  const auto r1 = entropy_estimate_check(t1, b, EntropyFunction(NonlinearitySpec::power_law(2.0, 1.0)));
  REQUIRE(r1.rhs_terms.size() == 5);
  CHECK(r1.rhs_terms[2] == doctest::Approx(2.0));
  CHECK(r1.rhs_terms[3] == doctest::Approx(3.0));
  CHECK(r1.rhs_terms[4] == doctest::Approx(9.0));
}

TEST_CASE("measure tail in the deterministic case") {
  const Grid g(1, 128, 2.0);
  const auto spec = NonlinearitySpec::power_law(2.0, 1.0);
  SolverConfig cfg;
  cfg.dt = 2e-5;
  const Field rho0 = bump_field(g, 0.5, 6.0, 0.2);
  const Trajectory tr = solve(rho0, spec, NoiseParams{}, cfg, 0.02, 1);
  for (double M : {2.0, 4.0}) {
    const TailReport rep = measure_tail(tr, spec, Field{}, M);
    double excess = 0.0;
    for (double v : rho0.values) excess += std::max(v - M, 0.0) * g.h();
    CHECK(rep.initial_excess == doctest::Approx(excess));
    CHECK(rep.lhs > 0.0);
    CHECK(rep.lhs <= rep.rhs);
    CHECK(rep.rhs == rep.rhs_ito);
  }
  CHECK_THROWS_AS(measure_tail(tr, spec, Field{}, 1.0), DomainError);
  const auto v = vanishing_at_infinity_check(tr, spec, {2.0, 4.0, 8.0}, 1e-8);
  CHECK(v.lhs.back() == 0.0);
  CHECK(v.monotone);
  CHECK(v.pass);
}
