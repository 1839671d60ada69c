#include "fluctuo/ldp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "fluctuo/errors.hpp"
#include "fluctuo/parallel.hpp"
#include "fluctuo/weighted_poisson.hpp"

namespace fluctuo {

TimeDifference parse_time_difference(const std::string& s) {
  if (s == "forward") return TimeDifference::forward;
  if (s == "centered") return TimeDifference::centered;
  throw ConfigError("unknown time difference '" + s + "' (expected forward or centered)");
}

std::string to_string(TimeDifference t) { return t == TimeDifference::centered ? "centered" : "forward"; }

namespace {

double total(const Field& f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  return s;
}

double abs_total(const Field& f) {
  double s = 0.0;
  for (double v : f.values) s += std::abs(v);
  return s;
}

}  // namespace

RateEvaluation minimal_control(const Trajectory& target, const NonlinearitySpec& spec, const RateOptions& opt) {
  const auto& S = target.states;
  const auto& t = target.times;
  if (S.size() < 2 || S.size() != t.size()) throw ConfigError("minimal_control needs a target with recorded states");
  const Grid& g = target.grid;
  for (std::size_t n = 1; n < S.size(); ++n) {
    const double drift = std::abs(total(S[n]) - total(S[n - 1]));
    if (drift > opt.mass_tol * abs_total(S[n - 1])) {
      throw DomainError(fmt::format("target not mass-conserving: mass changes by {:.3e} h^-d between slices {} and {}",
                                    drift, n - 1, n));
    }
  }
  const std::size_t K = S.size() - 1;
  RateEvaluation out;
  out.control = ControlField(g, t);
  out.floor = opt.weight_floor;
  out.slice_rate.assign(K, 0.0);

  PoissonOptions popt;
  popt.rel_tol = opt.cg_tol;
  popt.compatibility_tol = std::numeric_limits<double>::infinity();

  std::vector<double> phi_vals(g.size()), source(g.size());
  VectorField weight(g);
  for (std::size_t n = 0; n < K; ++n) {
    const Field& r = S[n];
    for (std::size_t i = 0; i < g.size(); ++i) phi_vals[i] = spec.phi(std::max(r[i], 0.0));
    const Field lap = divergence(gradient(g, phi_vals));
    std::size_t lo = n, hi = n + 1;
    if (opt.scheme == TimeDifference::centered && n > 0) {
      lo = n - 1;
      hi = n + 1;
    }
    const double dt = t[hi] - t[lo];
    for (std::size_t i = 0; i < g.size(); ++i) source[i] = (S[hi][i] - S[lo][i]) / dt - lap[i];

    for (int k = 0; k < g.d; ++k) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double m = 0.5 * (std::max(r[i], 0.0) + std::max(r[g.neighbor(i, k, +1)], 0.0));
        const double s = spec.sigma(m);
        weight[k][i] = std::max(s * s, opt.weight_floor);
      }
    }
    const PoissonResult pr = solve_weighted_poisson(weight, source, popt);
    out.residual_max = std::max(out.residual_max, pr.relative_residual);
    out.cg_iterations += pr.iterations;
    VectorField& gs = out.control.slice(n);
    gs = gradient(g, pr.phi);
    for (int k = 0; k < g.d; ++k) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double m = 0.5 * (std::max(r[i], 0.0) + std::max(r[g.neighbor(i, k, +1)], 0.0));
        gs[k][i] *= spec.sigma(m);
      }
    }
    out.slice_rate[n] = 0.5 * inner(gs, gs) * out.control.duration(n);
    out.rate += out.slice_rate[n];
  }
  return out;
}

double rate_function(const Field& rho0, const Trajectory& target, const NonlinearitySpec& spec, const RateOptions& opt) {
  if (target.states.empty()) throw ConfigError("rate_function needs a target with recorded states");
  require_same_grid(rho0.grid, target.grid);
  if (l1_distance(rho0, target.states.front()) > 1e-10) return std::numeric_limits<double>::infinity();
  try {
    return minimal_control(target, spec, opt).rate;
  } catch (const DomainError&) {
    return std::numeric_limits<double>::infinity();
  }
}

std::vector<McLevel> small_noise_levels(const NoiseParams& base, double eps0, const std::vector<double>& eps) {
  if (!(eps0 > 0.0)) throw ConfigError("reference eps0 must be > 0");
  std::vector<McLevel> out;
  for (double e : eps) {
    if (!(e > 0.0)) throw ConfigError("eps levels must be > 0");
    McLevel lv;
    lv.eps = e;
    lv.params = base;
    const double r = std::pow(e / eps0, 0.125);
    lv.params.alpha = base.alpha * r;
    lv.params.A = base.A * r;
    lv.params.K_a = static_cast<std::uint64_t>(std::ceil(static_cast<double>(base.K_a) * eps0 / e - 1e-9));
    out.push_back(lv);
  }
  return out;
}

McReport mc_small_noise(const Field& rho0, const Trajectory& target, const NonlinearitySpec& spec,
                        const std::vector<McLevel>& levels, const SolverConfig& base, std::size_t n_runs, double delta,
                        double rate, std::uint64_t seed0, unsigned threads, double factor) {
  if (n_runs == 0) throw ConfigError("mc_small_noise needs n_runs >= 1");
  if (levels.empty()) throw ConfigError("mc_small_noise needs at least one eps level");
  if (!(delta > 0.0)) throw ConfigError("tube radius must be > 0");
  if (target.states.size() != target.times.size() || target.states.size() < 2) {
    throw ConfigError("mc_small_noise needs a target recording every step");
  }
  require_same_grid(rho0.grid, target.grid);
  const double T = target.times.back();
  SolverConfig cfg = base;
  cfg.dt = target.dt;
  cfg.record_states = false;
  cfg.record_diagnostics = false;
  const auto [n_steps, dt] = step_plan(T, cfg.dt);
  if (n_steps + 1 != target.states.size()) {
    throw ConfigError("target must record every step of the Monte Carlo time grid");
  }

  McReport rep;
  rep.rate = rate;
  rep.tube_radius = delta;
  rep.factor = factor;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const McLevel& lv = levels[l];
    SolverConfig c = cfg;
    c.eps = lv.eps;
    std::vector<double> sup_dist(n_runs, 0.0);
    parallel_for(n_runs, threads, [&](std::size_t r) {
      const std::uint64_t seed = seed0 * 1000003ull + static_cast<std::uint64_t>(l) * n_runs + r;
      double sup = l1_distance(rho0, target.states.front());
      const StepObserver obs = [&](std::size_t step, double, const Field& rho) {
        sup = std::max(sup, l1_distance(rho, target.states[step]));
        return sup < delta;
      };
      solve(rho0, spec, lv.params, c, T, seed, nullptr, obs);
      sup_dist[r] = std::min(sup, delta);
    });
    McEntry e;
    e.eps = lv.eps;
    e.n_runs = n_runs;
    double mean = 0.0;
    for (double s : sup_dist) {
      if (s < delta) ++e.hits;
      mean += s;
    }
    e.mean_sup_distance = mean / static_cast<double>(n_runs);
    e.p = static_cast<double>(e.hits) / static_cast<double>(n_runs);
    if (e.hits == 0) {
      e.lower_bound_only = true;
      e.neg_eps_log_p = -lv.eps * std::log(1.0 / static_cast<double>(n_runs));
    } else {
      e.neg_eps_log_p = -lv.eps * std::log(e.p);
    }
    rep.entries.push_back(e);
  }
  rep.increasing = rep.entries.size() >= 2;
  for (std::size_t i = 1; i < rep.entries.size(); ++i) {
    if (!(rep.entries[i].eps < rep.entries[i - 1].eps) ||
        !(rep.entries[i].neg_eps_log_p > rep.entries[i - 1].neg_eps_log_p)) {
      rep.increasing = false;
    }
  }
  const double last = rep.entries.back().neg_eps_log_p;
  rep.within_factor = rate > 0.0 && last > 0.0 && last <= factor * rate && rate <= factor * last;
  return rep;
}

}  // namespace fluctuo
