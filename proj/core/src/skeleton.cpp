#include "fluctuo/skeleton.hpp"

#include <cmath>

#include "fluctuo/diagnostics.hpp"
#include "fluctuo/errors.hpp"
#include "fluctuo/rng.hpp"
#include "recorder.hpp"

namespace fluctuo {

namespace {

SolverConfig deterministic(SolverConfig c) {
  c.eps = 0.0;
  return c;
}

}  // namespace

Trajectory solve_skeleton(const Field& initial, const NonlinearitySpec& spec, const ControlField& control, double T,
                          const SolverConfig& config) {
  return solve_controlled(initial, spec, NoiseParams{}, deterministic(config), control, T, 0,
                          ControlOptions{.envelope = false, .mollify = false});
}

std::pair<Trajectory, ControlField> solve_skeleton_feedback(const Field& initial, const NonlinearitySpec& spec,
                                                            const FeedbackPolicy& policy, double T,
                                                            const SolverConfig& config) {
  const SolverConfig cfg = deterministic(config);
  const auto [n_steps, dt] = step_plan(T, cfg.dt);
  if (n_steps == 0) throw ConfigError("feedback skeleton solve needs T > 0");
  std::vector<double> knots(n_steps + 1);
  for (std::size_t n = 0; n <= n_steps; ++n) knots[n] = static_cast<double>(n) * dt;
  ControlField control(initial.grid, knots);

  Stepper st(spec, cfg, 0.0);
  const EntropyFunction ent(spec);
  const detail::Recorder rec{&ent, &spec, &cfg, n_steps};
  Trajectory tr;
  Field rho = initial;
  rec.init(tr, rho, dt, 0.0, 0.0, 0);
  for (std::size_t n = 0; n < n_steps; ++n) {
    VectorField g = policy(knots[n], rho);
    require_same_grid(g.grid, initial.grid);
    control.slice(n) = g;
    const double c = st.advance(rho, dt, nullptr, &control.slice(n));
    if (c > 0.0) {
      ++tr.clamp_events;
      tr.clamped_mass += c;
    }
    rec.record(tr, n + 1, knots[n + 1], rho, std::numeric_limits<double>::quiet_NaN());
  }
  return {std::move(tr), std::move(control)};
}

VectorField gradient_feedback(const Field& rho, const NonlinearitySpec& spec, const std::vector<double>& phi) {
  const Grid& g = rho.grid;
  VectorField out = gradient(g, phi);
  for (int k = 0; k < g.d; ++k) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double m = 0.5 * (std::max(rho[i], 0.0) + std::max(rho[g.neighbor(i, k, +1)], 0.0));
      out[k][i] *= spec.sigma(m);
    }
  }
  return out;
}

SkeletonEntropy skeleton_entropy_check(const Trajectory& traj, const ControlField& control, const EntropyFunction& ent) {
  if (traj.diagnostics.empty()) throw ConfigError("skeleton entropy check needs trajectory diagnostics");
  SkeletonEntropy out;
  double sup_e = 0.0, e0 = traj.diagnostics.front().entropy;
  if (!traj.states.empty()) {
    e0 = entropy_of(traj.states.front(), ent);
    for (const auto& st : traj.states) sup_e = std::max(sup_e, entropy_of(st, ent));
  }
  for (const auto& d : traj.diagnostics) sup_e = std::max(sup_e, d.entropy);
  out.lhs = sup_e + traj.diagnostics.back().dissipation_cum;
  out.rhs = e0 + 2.0 * control.energy();
  if (out.rhs == 0.0 && out.lhs == 0.0) {
    out.degenerate = true;
  } else {
    out.fitted_c = out.lhs / out.rhs;
  }
  return out;
}

double weak_form_residual(const Trajectory& traj, const ControlField& control, const NonlinearitySpec& spec,
                          std::size_t n_tests, std::uint64_t seed) {
  if (traj.states.size() < 2 || traj.states.size() != traj.times.size()) {
    throw ConfigError("weak-form residual needs a trajectory with recorded states");
  }
  require_same_grid(traj.grid, control.grid());
  const Grid& g = traj.grid;
  const double w = g.L / 8.0;
  const double hv = g.cell_volume();
  const Philox4x32 rng(seed);
  double worst = 0.0;
  for (std::size_t t = 0; t < n_tests; ++t) {
    const auto b = rng({static_cast<std::uint32_t>(t), 0, 0, 0xC0FFEEu});
    const double c[2] = {(b[0] * 0x1.0p-32 - 0.5) * g.L, (b[1] * 0x1.0p-32 - 0.5) * g.L};
    // psi = exp(-|x-c|^2 / (2 w^2))
    const auto psi = [&](const double* x, double* grad, double* lap) {
      double r2 = 0.0;
      for (int k = 0; k < g.d; ++k) r2 += (x[k] - c[k]) * (x[k] - c[k]);
      const double v = std::exp(-0.5 * r2 / (w * w));
      if (grad) {
        for (int k = 0; k < g.d; ++k) grad[k] = -(x[k] - c[k]) / (w * w) * v;
      }
      if (lap) *lap = (r2 / (w * w * w * w) - g.d / (w * w)) * v;
      return v;
    };
    std::vector<double> psi_c(g.size()), lap_c(g.size());
    std::array<std::vector<double>, 2> dpsi_f;
    for (int k = 0; k < g.d; ++k) dpsi_f[static_cast<std::size_t>(k)].resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      double x[2] = {g.center(i, 0), g.d == 2 ? g.center(i, 1) : 0.0};
      psi_c[i] = psi(x, nullptr, &lap_c[i]);
      for (int k = 0; k < g.d; ++k) {
        double xf[2] = {x[0], x[1]};
        xf[k] += 0.5 * g.h();
        double grad[2];
        psi(xf, grad, nullptr);
        dpsi_f[static_cast<std::size_t>(k)][i] = grad[k];
      }
    }
    const auto pair = [&](const Field& r) {
      double s = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) s += r[i] * psi_c[i];
      return s * hv;
    };
    double integral = 0.0;
    for (std::size_t n = 0; n + 1 < traj.states.size(); ++n) {
      const Field& r = traj.states[n];
      const VectorField& gs = control.slice(control.slice_index(traj.times[n]));
      double s = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) s += spec.phi(std::max(r[i], 0.0)) * lap_c[i];
      for (int k = 0; k < g.d; ++k) {
        for (std::size_t i = 0; i < g.size(); ++i) {
          const double m = 0.5 * (std::max(r[i], 0.0) + std::max(r[g.neighbor(i, k, +1)], 0.0));
          s += spec.sigma(m) * gs[k][i] * dpsi_f[static_cast<std::size_t>(k)][i];
        }
      }
      integral += (traj.times[n + 1] - traj.times[n]) * s * hv;
    }
    const double res = std::abs(pair(traj.states.back()) - pair(traj.states.front()) - integral);
    worst = std::max(worst, res);
  }
  return worst;
}

}  // namespace fluctuo
