#include <cmath>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "fluctuo/diagnostics.hpp"
#include "fluctuo/errors.hpp"
#include "fluctuo/skeleton.hpp"

using namespace fluctuo;

namespace {

Field smooth_field(const Grid& g) {
  Field f(g, 1.0, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) f[i] = 1.0 + 0.3 * std::cos(std::numbers::pi * g.center(i, 0) / g.L);
  return f;
}

ControlField sine_control(const Grid& g, double T, std::size_t slices, double amp) {
  std::vector<double> t(slices + 1);
  for (std::size_t n = 0; n <= slices; ++n) t[n] = T * static_cast<double>(n) / static_cast<double>(slices);
  ControlField c(g, t);
  for (std::size_t n = 0; n < slices; ++n) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      c.slice(n)[0][i] = amp * std::sin(std::numbers::pi * (g.center(i, 0) + 0.5 * g.h()) / g.L) * (1.0 + 0.5 * n);
    }
  }
  return c;
}

}  // namespace

TEST_CASE("control field bookkeeping") {
  const Grid g(1, 16, 1.0);
  ControlField c(g, {0.0, 0.5, 1.5});
  CHECK(c.n_slices() == 2);
  c.slice(0)[0].assign(g.size(), 2.0);
  c.slice(1)[0].assign(g.size(), 1.0);
  // 1/2 (4 * 2 * 0.5 + 1 * 2 * 1.0)
  CHECK(c.energy() == doctest::Approx(3.0));
  CHECK(c.scaled(2.0).energy() == doctest::Approx(12.0));
  CHECK(c.l2_distance(c.scaled(3.0)) == doctest::Approx(2.0 * c.l2_norm()));
  CHECK(c.slice_index(0.0) == 0);
  CHECK(c.slice_index(0.7) == 1);
  CHECK(c.slice_index(9.0) == 1);
  CHECK_THROWS_AS(ControlField(g, {0.0, 0.0}), ConfigError);

  const auto dir = std::filesystem::temp_directory_path() / "fluctuo_control_test";
  std::filesystem::remove_all(dir);
  c.write(dir);
  CHECK(std::filesystem::exists(dir / "times.csv"));
  CHECK(std::filesystem::exists(dir / "slice_1.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("zero control reproduces the deterministic solver bit for bit") {
  const Grid g(1, 64, 2.0);
  const auto spec = NonlinearitySpec::power_law(2.0, 1.0);
  SolverConfig cfg;
  cfg.dt = 1e-4;
  cfg.eps = 0.3;
  const Trajectory sk = solve_skeleton(smooth_field(g), spec, ControlField::zero(g, 0.02), 0.02, cfg);
  cfg.eps = 0.0;
  const Trajectory det = solve(smooth_field(g), spec, NoiseParams{}, cfg, 0.02, 1);
  REQUIRE(sk.states.size() == det.states.size());
  for (std::size_t n = 0; n < sk.states.size(); ++n) CHECK(sk.states[n].values == det.states[n].values);
  CHECK(sk.eps == 0.0);
}

TEST_CASE("uniform control on a uniform state is a steady state") {
  const Grid g(2, 16, 1.0);
  ControlField c = ControlField::zero(g, 0.01);
  c.slice(0)[0].assign(g.size(), 3.0);
  c.slice(0)[1].assign(g.size(), -1.0);
  SolverConfig cfg;
  cfg.dt = 1e-4;
  const Trajectory tr = solve_skeleton(Field(g, 1.0, 2.0), NonlinearitySpec::power_law(2.0, 1.0), c, 0.01, cfg);
  for (double v : tr.states.back().values) CHECK(v == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("controlled paths satisfy the weak form") {
  const auto spec = NonlinearitySpec::power_law(2.0, 1.0);
  double prev = 0.0;
  for (std::size_t N : {64, 128}) {
    const Grid g(1, N, 2.0);
    SolverConfig cfg;
    cfg.dt = 0.2 * g.h() * g.h() / 4.0;
    const ControlField c = sine_control(g, 0.05, 4, 0.5);
    const Trajectory tr = solve_skeleton(smooth_field(g), spec, c, 0.05, cfg);
    const double r = weak_form_residual(tr, c, spec, 8, 3);
    CHECK(r < 1e-3);
    if (prev > 0.0) CHECK(r < prev);
    prev = r;
  }
}

TEST_CASE("feedback control is recorded and replays exactly") {
  const Grid g(1, 64, 2.0);
  const auto spec = NonlinearitySpec::power_law(2.0, 1.0);
  SolverConfig cfg;
  cfg.dt = 1e-4;
  std::vector<double> phi(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) phi[i] = 0.2 * std::sin(std::numbers::pi * g.center(i, 0) / g.L);
  const auto policy = [&](double, const Field& rho) { return gradient_feedback(rho, spec, phi); };
  const auto [tr, control] = solve_skeleton_feedback(smooth_field(g), spec, policy, 0.01, cfg);
  CHECK(control.n_slices() == 100);
  CHECK(control.energy() > 0.0);
  const Trajectory replay = solve_skeleton(smooth_field(g), spec, control, 0.01, cfg);
  CHECK(replay.states.back().values == tr.states.back().values);

  const Field rho = smooth_field(g);
  const VectorField fb = gradient_feedback(rho, spec, phi);
  const double m = 0.5 * (rho[0] + rho[1]);
  CHECK(fb[0][0] == doctest::Approx(std::sqrt(spec.phi(m)) * (phi[1] - phi[0]) / g.h()));
}

TEST_CASE("skeleton entropy check") {
  const Grid g(1, 64, 2.0);
  const auto spec = NonlinearitySpec::power_law(2.0, 1.0);
  const EntropyFunction ent(spec);
  SolverConfig cfg;
  cfg.dt = 1e-4;
  const ControlField zero = ControlField::zero(g, 0.01);
  const auto flat = skeleton_entropy_check(solve_skeleton(Field(g, 1.0, 1.0), spec, zero, 0.01, cfg), zero, ent);
  CHECK(flat.degenerate);
  CHECK(std::isnan(flat.fitted_c));

  const ControlField c = sine_control(g, 0.01, 2, 2.0);
  const Trajectory tr = solve_skeleton(smooth_field(g), spec, c, 0.01, cfg);
  const auto rep = skeleton_entropy_check(tr, c, ent);
  CHECK_FALSE(rep.degenerate);
  CHECK(rep.rhs == doctest::Approx(entropy_of(smooth_field(g), ent) + 2.0 * c.energy()));
  CHECK(rep.fitted_c == doctest::Approx(rep.lhs / rep.rhs));
  CHECK(rep.fitted_c > 0.0);
  CHECK(rep.fitted_c < 4.0);
}
