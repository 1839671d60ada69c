#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "fluctuo/errors.hpp"
#include "fluctuo/ldp.hpp"
#include "fluctuo/parallel.hpp"
#include "fluctuo/skeleton.hpp"
#include "fluctuo/weighted_poisson.hpp"

using namespace fluctuo;

namespace {

Field smooth_field(const Grid& g) {
  Field f(g, 1.0, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double v = 1.0;
    for (int k = 0; k < g.d; ++k) v += 0.3 * std::cos(std::numbers::pi * g.center(i, k) / g.L);
    f[i] = v;
  }
  return f;
}

std::vector<double> potential(const Grid& g, double amp) {
  std::vector<double> phi(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    double v = 0.0;
    for (int k = 0; k < g.d; ++k) v += std::sin(std::numbers::pi * g.center(i, k) / g.L + 0.3 * k);
    phi[i] = amp * v;
  }
  return phi;
}

}  // namespace

TEST_CASE("weighted Poisson recovers a manufactured potential") {
  for (int d : {1, 2}) {
    const Grid g(d, 32, 1.0);
    VectorField w(g);
    for (int k = 0; k < d; ++k) {
      for (std::size_t i = 0; i < g.size(); ++i) w[k][i] = 1.0 + 0.5 * std::sin(g.center(i, 0) * 3.0 + k);
    }
    std::vector<double> exact = potential(g, 1.0);
    double mean = 0.0;
    for (double v : exact) mean += v;
    mean /= static_cast<double>(g.size());
    for (double& v : exact) v -= mean;
    std::vector<double> rhs;
    apply_weighted_laplacian(w, exact, rhs);
    const PoissonResult r = solve_weighted_poisson(w, rhs, PoissonOptions{.rel_tol = 1e-12});
    CHECK(r.converged);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(r.phi[i] == doctest::Approx(exact[i]).scale(1.0).epsilon(1e-8));
    CHECK(r.history.size() == r.iterations);

    std::vector<double> bad = rhs;
    bad[0] += 1.0;
    CHECK_THROWS_AS(solve_weighted_poisson(w, bad), DomainError);
    VectorField zero_w(g, 0.0);
    CHECK_THROWS_AS(solve_weighted_poisson(zero_w, rhs), SolverError);
  }
}

TEST_CASE("rate of a feedback-driven target matches its control energy") {
  const Grid g(1, 64, 2.0);
  const auto spec = NonlinearitySpec::power_law(2.0, 1.0);
  SolverConfig cfg;
  cfg.dt = 2e-4;
  const Field rho0 = smooth_field(g);
  double base = 0.0;
  for (double lambda : {1.0, 0.5, 2.0}) {
    const auto phi = potential(g, 0.3 * lambda);
    const auto [target, control] = solve_skeleton_feedback(
        rho0, spec, [&](double, const Field& r) { return gradient_feedback(r, spec, phi); }, 0.02, cfg);
    const RateEvaluation ev = minimal_control(target, spec);
    CHECK(ev.rate == doctest::Approx(control.energy()).epsilon(0.02));
    CHECK(ev.control.l2_distance(control) <= 0.02 * control.l2_norm());
    CHECK(ev.slice_rate.size() == 100);
    CHECK(rate_function(rho0, target, spec) == doctest::Approx(ev.rate));
    if (lambda == 1.0) {
      base = ev.rate;
    } else {
      CHECK(ev.rate / base == doctest::Approx(lambda * lambda).epsilon(0.03));
    }
  }
}

TEST_CASE("unforced target has vanishing rate") {
  for (int d : {1, 2}) {
    const Grid g(d, d == 1 ? 64 : 16, 2.0);
    const auto spec = NonlinearitySpec::power_law(2.0, 1.0);
    SolverConfig cfg;
    cfg.dt = 1e-4;
    const Trajectory target = solve(smooth_field(g), spec, NoiseParams{}, cfg, 0.01, 1);
    const double rate = rate_function(smooth_field(g), target, spec);
    CHECK(rate >= 0.0);
    CHECK(rate <= 1e-6 * g.cell_volume());
  }
}

TEST_CASE("infeasible targets have infinite rate") {
  const Grid g(1, 32, 2.0);
  const auto spec = NonlinearitySpec::power_law(2.0, 1.0);
  SolverConfig cfg;
  cfg.dt = 1e-4;
  Trajectory target = solve(smooth_field(g), spec, NoiseParams{}, cfg, 0.005, 1);
  Field other = smooth_field(g);
  other[3] += 0.1;
  CHECK(std::isinf(rate_function(other, target, spec)));
  target.states.back()[5] += 0.1;
  CHECK(std::isinf(rate_function(smooth_field(g), target, spec)));
  CHECK_THROWS_AS(minimal_control(target, spec), DomainError);
}

TEST_CASE("small-noise level schedule") {
  const NoiseParams base{.alpha = 0.8, .A = 1.0, .K_a = 3, .seed = 1};
  const auto lv = small_noise_levels(base, 0.1, {0.1, 0.05, 0.025});
  REQUIRE(lv.size() == 3);
  CHECK(lv[0].params.alpha == doctest::Approx(0.8));
  CHECK(lv[1].params.alpha == doctest::Approx(0.8 * std::pow(0.5, 0.125)));
  CHECK(lv[2].params.A == doctest::Approx(std::pow(0.25, 0.125)));
  CHECK(lv[1].params.K_a == 6);
  CHECK(lv[2].params.K_a == 12);
  CHECK_THROWS_AS(small_noise_levels(base, 0.0, {0.1}), ConfigError);
  CHECK(parse_time_difference("centered") == TimeDifference::centered);
  CHECK(to_string(TimeDifference::forward) == "forward");
  CHECK_THROWS_AS(parse_time_difference("backward"), ConfigError);
}

TEST_CASE("Monte Carlo plumbing is deterministic and thread-independent") {
  const Grid g(1, 32, 4.0);
  const auto spec = NonlinearitySpec::power_law(2.0, 1.0);
  SolverConfig cfg;
  cfg.dt = 5e-4;
  const Field rho0 = smooth_field(g);
  const Trajectory target = solve(rho0, spec, NoiseParams{}, cfg, 0.02, 1);
  const NoiseParams base{.alpha = 0.9, .A = 0.5, .K_a = 1, .seed = 1};
  const auto levels = small_noise_levels(base, 0.02, {0.02, 0.01});
  const McReport a = mc_small_noise(rho0, target, spec, levels, cfg, 16, 0.5, 0.0, 3, 1);
  const McReport b = mc_small_noise(rho0, target, spec, levels, cfg, 16, 0.5, 0.0, 3, 4);
  REQUIRE(a.entries.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(a.entries[i].hits == b.entries[i].hits);
    CHECK(a.entries[i].mean_sup_distance == b.entries[i].mean_sup_distance);
    CHECK(a.entries[i].p >= 0.0);
    CHECK(a.entries[i].p <= 1.0);
  }
  CHECK(a.entries[0].mean_sup_distance < 0.5);
  // Smaller noise stays closer to the deterministic path on average.
  CHECK(a.entries[1].mean_sup_distance < a.entries[0].mean_sup_distance);
  CHECK_FALSE(a.within_factor);
}

TEST_CASE("parallel_for covers every index and propagates exceptions") {
  std::vector<int> seen(1000, 0);
  parallel_for(seen.size(), 4, [&](std::size_t i) { seen[i] += 1; });
  for (int v : seen) CHECK(v == 1);
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) { if (i == 7) throw SolverError("boom"); }), SolverError);
}
