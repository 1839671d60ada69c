#include "fluctuo/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "fluctuo/diagnostics.hpp"
#include "fluctuo/errors.hpp"
#include "fluctuo/log.hpp"
#include "recorder.hpp"

namespace fluctuo {

NegativityPolicy parse_negativity_policy(const std::string& s) {
  if (s == "clamp_and_log") return NegativityPolicy::clamp_and_log;
  if (s == "reject") return NegativityPolicy::reject;
  throw ConfigError("unknown negativity policy '" + s + "' (expected clamp_and_log or reject)");
}

std::string to_string(NegativityPolicy p) {
  return p == NegativityPolicy::reject ? "reject" : "clamp_and_log";
}

std::pair<std::size_t, double> step_plan(double T, double dt) {
  if (!(T >= 0.0) || !std::isfinite(T)) throw ConfigError("time horizon T must be >= 0");
  if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
  if (T == 0.0) return {0, dt};
  const auto n = static_cast<std::size_t>(std::ceil(T / dt * (1.0 - 1e-12)));
  return {std::max<std::size_t>(n, 1), T / static_cast<double>(std::max<std::size_t>(n, 1))};
}

// ---------------------------------------------------------------------------

Stepper::Stepper(NonlinearitySpec spec, SolverConfig config, double qv)
    : spec_(std::move(spec)), config_(config), qv_(qv) {
  if (!(config_.dt > 0.0)) throw ConfigError("solver dt must be > 0");
  if (!(config_.eta >= 0.0)) throw ConfigError("solver eta must be >= 0");
  if (!(config_.eps >= 0.0)) throw ConfigError("solver eps must be >= 0");
  if (!(config_.cfl_safety > 0.0 && config_.cfl_safety <= 1.0)) throw ConfigError("cfl_safety must lie in (0, 1]");
  if (!(config_.negativity_tol >= 0.0)) throw ConfigError("negativity_tol must be >= 0");
  if (config_.output_stride == 0) throw ConfigError("output_stride must be >= 1");
}

namespace {

double secant(const NonlinearitySpec& spec, double a, double b, double pa, double pb) {
  if (b != a) return (pb - pa) / (b - a);
  return spec.phi_prime(a);
}

}  // namespace

double Stepper::dt_max(const Field& rho) const {
  const Grid& g = rho.grid;
  const double ito = 0.5 * config_.eps * qv_;
  double worst = 0.0;
  for (int k = 0; k < g.d; ++k) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double a = std::max(rho[i], 0.0);
      const double b = std::max(rho[g.neighbor(i, k, +1)], 0.0);
      double c = secant(spec_, a, b, spec_.phi(a), spec_.phi(b)) + config_.eta;
      if (ito > 0.0) {
        const double sp = spec_.sigma_prime(std::max(0.5 * (a + b), kRhoFloor));
        c += ito * sp * sp;
      }
      worst = std::max(worst, c);
    }
  }
  if (worst <= 0.0) return std::numeric_limits<double>::infinity();
  const double h = g.h();
  return config_.cfl_safety * h * h / (2.0 * g.d * worst);
}

double Stepper::advance(Field& rho, double dt, const VectorField* dW, const VectorField* u) {
  const Grid& g = rho.grid;
  const std::size_t n = g.size();
  const double h = g.h();
  const double inv_h = 1.0 / h;
  const double ito = 0.5 * config_.eps * qv_;
  const double sqrt_eps = std::sqrt(config_.eps);
  const bool has_nu = spec_.c_nu() != 0.0;
  if (dW) require_same_grid(dW->grid, g);
  if (u) require_same_grid(u->grid, g);

  phi_.resize(n);
  for (std::size_t i = 0; i < n; ++i) phi_[i] = spec_.phi(std::max(rho[i], 0.0));

  VectorField flux(g);
  double worst = 0.0;
  for (int k = 0; k < g.d; ++k) {
    auto& F = flux[k];
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = g.neighbor(i, k, +1);
      const double a = std::max(rho[i], 0.0);
      const double b = std::max(rho[j], 0.0);
      const double m = 0.5 * (a + b);
      double coeff = secant(spec_, a, b, phi_[i], phi_[j]) + config_.eta;
      double f = (phi_[j] - phi_[i]) * inv_h + config_.eta * (rho[j] - rho[i]) * inv_h;
      if (ito > 0.0) {
        const double sp = spec_.sigma_prime(std::max(m, kRhoFloor));
        f += ito * sp * sp * (rho[j] - rho[i]) * inv_h;
        coeff += ito * sp * sp;
      }
      worst = std::max(worst, coeff);
      if (has_nu) f -= spec_.nu(m);
      f *= dt;
      if (dW || u) {
        const double s = spec_.sigma(m);
        if (dW) f -= sqrt_eps * s * (*dW)[k][i];
        if (u) f -= dt * s * (*u)[k][i];
      }
      F[i] = f;
    }
  }
  const double limit = worst > 0.0 ? config_.cfl_safety * h * h / (2.0 * g.d * worst)
                                   : std::numeric_limits<double>::infinity();
  if (dt > limit * (1.0 + 1e-12)) {
    throw CflViolation(fmt::format("CFL violation: dt = {:.6g} exceeds stable limit {:.6g}", dt, limit), dt, limit);
  }

  for (int k = 0; k < g.d; ++k) {
    const auto& F = flux[k];
    for (std::size_t i = 0; i < n; ++i) rho[i] += (F[i] - F[g.neighbor(i, k, -1)]) * inv_h;
  }

  const double mn = rho.min();
  if (mn >= 0.0) return 0.0;
  if (config_.negativity_policy == NegativityPolicy::reject) {
    if (mn < -config_.negativity_tol) {
      throw NegativityError(fmt::format("density dropped to {:.6g} below -tol = {:.3g}", mn, -config_.negativity_tol));
    }
    return 0.0;
  }
  double deficit = 0.0, positive = 0.0;
  for (double& v : rho.values) {
    if (v < 0.0) {
      deficit -= v;
      v = 0.0;
    } else {
      positive += v;
    }
  }
  if (positive > 0.0) {
    const double scale = 1.0 - deficit / positive;
    for (double& v : rho.values) v *= scale;
  }
  log_debug(fmt::format("clamped negative density (min {:.3g}), redistributed mass {:.3g}", mn,
                        deficit * g.cell_volume()));
  return deficit * g.cell_volume();
}

Field step_ito(const Field& state, const NonlinearitySpec& spec, const NoiseModel& noise, const SolverConfig& config,
               const VectorField& increment, double dt) {
  require_same_grid(state.grid, noise.grid());
  Stepper st(spec, config, noise.a_norm_sq());
  Field out = state;
  st.advance(out, dt, config.eps > 0.0 ? &increment : nullptr, nullptr);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

NoiseParams with_seed(NoiseParams p, std::uint64_t seed) {
  p.seed = seed;
  return p;
}

/// Shared loop for solve / solve_controlled.
Trajectory run(const Field& initial, const NonlinearitySpec& spec, const NoiseParams& params,
               const SolverConfig& config, double T, std::uint64_t seed, const Field* reference,
               const StepObserver& observer, const ControlField* control, ControlOptions opts) {
  if (reference) require_same_grid(reference->grid, initial.grid);
  if (control) require_same_grid(control->grid(), initial.grid);
  const bool noisy = config.eps > 0.0;
  std::unique_ptr<NoiseModel> model;
  if (noisy || (control && (opts.mollify || opts.envelope))) {
    model = std::make_unique<NoiseModel>(initial.grid, with_seed(params, seed));
  }
  const double qv = noisy ? model->a_norm_sq() : 0.0;
  Stepper st(spec, config, qv);
  const auto [n_steps, dt] = step_plan(T, config.dt);
  const EntropyFunction ent(spec);
  const detail::Recorder rec{&ent, &spec, &config, n_steps};

  Trajectory tr;
  Field rho = initial;
  const auto ref_dist = [&](const Field& r) {
    return reference ? l1_distance(r, *reference) : std::numeric_limits<double>::quiet_NaN();
  };
  rec.init(tr, rho, dt, config.eps, qv, seed);
  if (reference && config.record_diagnostics) tr.diagnostics.back().l1_to_reference = ref_dist(rho);

  VectorField dW(initial.grid);
  VectorField u(initial.grid);
  std::vector<double> tmp;
  std::size_t active_slice = std::numeric_limits<std::size_t>::max();
  for (std::size_t n = 0; n < n_steps; ++n) {
    const double t = static_cast<double>(n) * dt;
    if (noisy) model->sample(dt, n, dW);
    if (control) {
      const std::size_t s = control->slice_index(t);
      if (s != active_slice) {
        active_slice = s;
        const VectorField& gs = control->slice(s);
        const auto& gbar = control->uniform(s);
        for (int k = 0; k < initial.grid.d; ++k) {
          if (opts.mollify) {
            model->mollify(gs[k], tmp);
          } else {
            tmp = gs[k];
          }
          if (opts.envelope) {
            const auto& e = model->envelope(k);
            const auto& ec = model->envelope_complement(k);
            for (std::size_t i = 0; i < tmp.size(); ++i) u[k][i] = e[i] * tmp[i] + ec[i] * gbar[static_cast<std::size_t>(k)];
          } else {
            u[k] = tmp;
          }
        }
      }
    }
    const double clamped = st.advance(rho, dt, noisy ? &dW : nullptr, control ? &u : nullptr);
    if (clamped > 0.0) {
      ++tr.clamp_events;
      tr.clamped_mass += clamped;
    }
    const double t1 = static_cast<double>(n + 1) * dt;
    rec.record(tr, n + 1, t1, rho, ref_dist(rho));
    if (observer && !observer(n + 1, t1, rho)) break;
  }
  if (tr.clamp_events > 0) {
    log_info(fmt::format("negativity clamp applied in {} steps, total redistributed mass {:.3g}", tr.clamp_events,
                         tr.clamped_mass));
  }
  return tr;
}

}  // namespace

Trajectory solve(const Field& initial, const NonlinearitySpec& spec, const NoiseParams& params,
                 const SolverConfig& config, double T, std::uint64_t seed, const Field* reference,
                 const StepObserver& observer) {
  return run(initial, spec, params, config, T, seed, reference, observer, nullptr, {});
}

Trajectory solve_controlled(const Field& initial, const NonlinearitySpec& spec, const NoiseParams& params,
                            const SolverConfig& config, const ControlField& control, double T, std::uint64_t seed,
                            ControlOptions options) {
  return run(initial, spec, params, config, T, seed, nullptr, {}, &control, options);
}

std::pair<Trajectory, Trajectory> coupled_solve(const Field& initial1, const Field& initial2,
                                                const NonlinearitySpec& spec, const NoiseParams& params,
                                                const SolverConfig& config, double T, std::uint64_t seed) {
  require_same_grid(initial1.grid, initial2.grid);
  const bool noisy = config.eps > 0.0;
  std::unique_ptr<NoiseModel> model;
  if (noisy) model = std::make_unique<NoiseModel>(initial1.grid, with_seed(params, seed));
  const double qv = noisy ? model->a_norm_sq() : 0.0;
  Stepper st(spec, config, qv);
  const auto [n_steps, dt] = step_plan(T, config.dt);
  const EntropyFunction ent(spec);
  const detail::Recorder rec{&ent, &spec, &config, n_steps};

  std::pair<Trajectory, Trajectory> out;
  Field r1 = initial1, r2 = initial2;
  rec.init(out.first, r1, dt, config.eps, qv, seed);
  rec.init(out.second, r2, dt, config.eps, qv, seed);
  if (config.record_diagnostics) {
    const double d0 = l1_distance(r1, r2);
    out.first.diagnostics.back().l1_to_reference = d0;
    out.second.diagnostics.back().l1_to_reference = d0;
  }
  VectorField dW(initial1.grid);
  for (std::size_t n = 0; n < n_steps; ++n) {
    if (noisy) model->sample(dt, n, dW);
    for (auto [rho, tr] : {std::pair{&r1, &out.first}, std::pair{&r2, &out.second}}) {
      const double c = st.advance(*rho, dt, noisy ? &dW : nullptr, nullptr);
      if (c > 0.0) {
        ++tr->clamp_events;
        tr->clamped_mass += c;
      }
    }
    const double t1 = static_cast<double>(n + 1) * dt;
    const double d = l1_distance(r1, r2);
    rec.record(out.first, n + 1, t1, r1, d);
    rec.record(out.second, n + 1, t1, r2, d);
  }
  return out;
}

void write_diagnostics_csv(const Trajectory& traj, std::ostream& out) {
  out << "t,mass_excess,entropy,dissipation,dissipation_cum,min_rho,l1_to_reference\n";
  for (const auto& d : traj.diagnostics) {
    out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", d.t, d.mass_excess, d.entropy,
                       d.dissipation, d.dissipation_cum, d.min_rho, d.l1_to_reference);
  }
}

ItoCheck ito_correction_check(const Field& rho, const NonlinearitySpec& spec, double qv) {
  const Grid& g = rho.grid;
  if (rho.min() <= 0.0) throw DomainError("Ito correction check needs a strictly positive field");
  const double inv_h = 1.0 / g.h();
  VectorField implemented(g), logform(g);
  for (int k = 0; k < g.d; ++k) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double a = rho[i], b = rho[g.neighbor(i, k, +1)];
      const double sp = spec.sigma_prime(std::max(0.5 * (a + b), kRhoFloor));
      implemented[k][i] = 0.5 * qv * sp * sp * (b - a) * inv_h;
      logform[k][i] = qv / 8.0 * (std::log(b) - std::log(a)) * inv_h;
    }
  }
  const Field d1 = divergence(implemented), d2 = divergence(logform);
  ItoCheck c;
  for (std::size_t i = 0; i < g.size(); ++i) {
    c.max_abs_diff = std::max(c.max_abs_diff, std::abs(d1[i] - d2[i]));
    c.max_abs_term = std::max(c.max_abs_term, std::abs(d2[i]));
  }
  return c;
}

}  // namespace fluctuo
