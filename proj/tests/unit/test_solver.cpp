#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "fluctuo/errors.hpp"
#include "fluctuo/solver.hpp"

using namespace fluctuo;

namespace {

double total(const Field& f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  return s;
}

Field cosine_bump(const Grid& g, double mean, double amp) {
  Field f(g, mean, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double v = mean;
    for (int k = 0; k < g.d; ++k) v += amp * std::cos(std::numbers::pi * g.center(i, k) / g.L);
    f[i] = v;
  }
  return f;
}

}  // namespace

TEST_CASE("step plan") {
  CHECK(step_plan(1.0, 0.3) == std::pair<std::size_t, double>{4, 0.25});
  CHECK(step_plan(1.0, 0.25).first == 4);
  CHECK(step_plan(0.0, 0.1).first == 0);
  CHECK_THROWS_AS(step_plan(-1.0, 0.1), ConfigError);
  CHECK_THROWS_AS(step_plan(1.0, 0.0), ConfigError);
}

TEST_CASE("linear diffusion reproduces the discrete amplification factor") {
  // For Phi(xi) = xi the scheme is rho' = rho + dt Lap_h rho; a cosine mode decays
  // by exactly 1 - dt (4/h^2) sin^2(k h / 2) per step.
  const Grid g(1, 64, 2.0);
  const double k = std::numbers::pi / g.L;
  const Field rho0 = cosine_bump(g, 1.0, 0.3);
  SolverConfig cfg;
  cfg.dt = 1e-4;
  const Trajectory tr = solve(rho0, NonlinearitySpec::power_law(1.0, 1.0), NoiseParams{}, cfg, 0.05, 1);
  const double lam = 4.0 / (g.h() * g.h()) * std::pow(std::sin(0.5 * k * g.h()), 2);
  const double amp = 0.3 * std::pow(1.0 - cfg.dt * lam, 500.0);
  const Field& last = tr.states.back();
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(last[i] == doctest::Approx(1.0 + amp * std::cos(k * g.center(i, 0))).epsilon(1e-12));
  }
}

TEST_CASE("noisy steps conserve mass") {
  for (int d : {1, 2}) {
    const Grid g(d, d == 1 ? 128 : 32, 4.0);
    const Field rho0 = cosine_bump(g, 1.0, 0.4);
    SolverConfig cfg;
    cfg.dt = 2e-4;
    cfg.eps = 0.01;
    cfg.record_states = false;
    const NoiseParams p{.alpha = 0.9, .A = 0.5, .K_a = 1, .seed = 1};
    const Trajectory tr = solve(rho0, NonlinearitySpec::power_law(2.0, 1.0), p, cfg, 0.1, 4);
    const double m0 = std::abs(mass_excess(rho0)) + integrate(rho0);
    for (const auto& dg : tr.diagnostics) {
      CHECK(std::abs(dg.mass_excess - mass_excess(rho0)) <= 1e-11 * m0);
    }
  }
}

TEST_CASE("same seed gives identical trajectories") {
  const Grid g(1, 64, 4.0);
  const Field rho0 = cosine_bump(g, 1.0, 0.4);
  SolverConfig cfg;
  cfg.dt = 5e-4;
  cfg.eps = 0.05;
  const NoiseParams p{.alpha = 0.9, .A = 0.5, .K_a = 1, .seed = 99};
  const auto spec = NonlinearitySpec::power_law(2.0, 1.0);
  const Trajectory a = solve(rho0, spec, p, cfg, 0.05, 7);
  const Trajectory b = solve(rho0, spec, p, cfg, 0.05, 7);
  const Trajectory c = solve(rho0, spec, p, cfg, 0.05, 8);
  CHECK(a.states.back().values == b.states.back().values);
  CHECK(a.states.back().values != c.states.back().values);
  CHECK(a.seed == 7);
}

TEST_CASE("CFL violation leaves the state untouched") {
  const Grid g(1, 64, 1.0);
  Field rho = cosine_bump(g, 1.0, 0.5);
  const Field before = rho;
  Stepper st(NonlinearitySpec::power_law(2.0, 1.0), SolverConfig{}, 0.0);
  const double lim = st.dt_max(rho);
  CHECK(lim > 0.0);
  CHECK_THROWS_AS(st.advance(rho, 2.0 * lim, nullptr, nullptr), CflViolation);
  CHECK(rho.values == before.values);
  try {
    st.advance(rho, 2.0 * lim, nullptr, nullptr);
  } catch (const CflViolation& e) {
    CHECK(e.dt_max() == doctest::Approx(lim));
  }
  CHECK_NOTHROW(st.advance(rho, lim, nullptr, nullptr));
}

TEST_CASE("negativity policies") {
  const Grid g(1, 16, 1.0);
  Field rho(g, 1.0, 1.0);
  rho[3] = 0.0;
  rho[4] = 2.0;
  // Strong control pushing mass out of cell 3.
  VectorField u(g);
  u[0][3] = -1e4;
  SolverConfig cfg;
  cfg.dt = 1e-3;
  cfg.negativity_policy = NegativityPolicy::reject;
  Stepper rej(NonlinearitySpec::power_law(1.0, 1.0), cfg, 0.0);
  Field r1 = rho;
  CHECK_THROWS_AS(rej.advance(r1, cfg.dt, nullptr, &u), NegativityError);

  cfg.negativity_policy = NegativityPolicy::clamp_and_log;
  Stepper clamp(NonlinearitySpec::power_law(1.0, 1.0), cfg, 0.0);
  Field r2 = rho;
  const double m0 = total(r2);
  const double clamped = clamp.advance(r2, cfg.dt, nullptr, &u);
  CHECK(clamped > 0.0);
  CHECK(r2.min() >= 0.0);
  CHECK(total(r2) == doctest::Approx(m0).epsilon(1e-13));

  CHECK(parse_negativity_policy("reject") == NegativityPolicy::reject);
  CHECK(to_string(NegativityPolicy::clamp_and_log) == "clamp_and_log");
  CHECK_THROWS_AS(parse_negativity_policy("ignore"), ConfigError);
}

TEST_CASE("coupled runs share the noise") {
  const Grid g(1, 64, 4.0);
  const Field r1 = cosine_bump(g, 1.0, 0.4);
  const Field r2 = cosine_bump(g, 1.2, 0.2);
  SolverConfig cfg;
  cfg.dt = 2e-4;
  cfg.eps = 0.01;
  const NoiseParams p{.alpha = 0.9, .A = 0.5, .K_a = 1, .seed = 1};
  const auto spec = NonlinearitySpec::power_law(2.0, 1.0);
  const auto [a, b] = coupled_solve(r1, r2, spec, p, cfg, 0.02, 5);
  const Trajectory solo = solve(r1, spec, p, cfg, 0.02, 5);
  CHECK(a.states.back().values == solo.states.back().values);
  const double d0 = l1_distance(r1, r2);
  for (std::size_t n = 0; n < a.diagnostics.size(); ++n) {
    CHECK(a.diagnostics[n].l1_to_reference == b.diagnostics[n].l1_to_reference);
    CHECK(a.diagnostics[n].l1_to_reference <= 1.02 * d0);
  }
}

TEST_CASE("observer, stride and diagnostics output") {
  const Grid g(1, 32, 1.0);
  const Field rho0 = cosine_bump(g, 1.0, 0.4);
  SolverConfig cfg;
  cfg.dt = 1e-4;
  cfg.output_stride = 30;
  const auto spec = NonlinearitySpec::power_law(2.0, 1.0);
  const Trajectory tr = solve(rho0, spec, NoiseParams{}, cfg, 0.01, 1);
  CHECK(tr.states.size() == 1 + 3 + 1);
  CHECK(tr.times.back() == doctest::Approx(0.01));
  CHECK(tr.diagnostics.size() == 101);

  std::size_t calls = 0;
  const Trajectory stopped = solve(rho0, spec, NoiseParams{}, cfg, 0.01, 1, nullptr,
                                   [&](std::size_t step, double, const Field&) { return ++calls, step < 10; });
  CHECK(calls == 10);
  CHECK(stopped.diagnostics.size() == 11);

  std::ostringstream csv;
  write_diagnostics_csv(tr, csv);
  CHECK(csv.str().rfind("t,mass_excess,entropy,dissipation,dissipation_cum,min_rho,l1_to_reference\n", 0) == 0);
}

TEST_CASE("Ito correction agrees with the log-Laplacian form") {
  const auto spec = NonlinearitySpec::power_law(1.0, 1.0);
  double prev = 0.0;
  for (std::size_t N : {64, 128}) {
    const Grid g(1, N, 2.0);
    const Field rho = cosine_bump(g, 1.0, 0.5);
    const ItoCheck c = ito_correction_check(rho, spec, 2.0);
    CHECK(c.max_abs_term > 0.0);
    CHECK(c.max_abs_diff <= 1e-2 * c.max_abs_term);
    if (prev > 0.0) CHECK(prev / c.max_abs_diff > 3.0);
    prev = c.max_abs_diff;
  }
  CHECK_THROWS_AS(ito_correction_check(Field(Grid(1, 8, 1.0), 1.0, 0.0), spec, 1.0), DomainError);
}
