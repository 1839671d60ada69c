#include "fluctuo/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "fluctuo/errors.hpp"

namespace fluctuo {

double entropy_of(const Field& field, const EntropyFunction& ent) {
  double s = 0.0;
  for (double v : field.values) s += ent.psi(std::max(v, 0.0));
  return s * field.grid.cell_volume();
}

double dissipation_of(const Field& field, const NonlinearitySpec& spec) {
  const Grid& g = field.grid;
  std::vector<double> r(field.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = spec.phi_sqrt(std::max(field[i], 0.0));
  const double inv_h = 1.0 / g.h();
  double s = 0.0;
  for (int k = 0; k < g.d; ++k) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double d = (r[g.neighbor(i, k, +1)] - r[i]) * inv_h;
      s += d * d;
    }
  }
  return s * g.cell_volume();
}

KineticIdentity kinetic_l1_identity(const Field& rho1, const Field& rho2) {
  require_same_grid(rho1.grid, rho2.grid);
  KineticIdentity out;
  double rhs = 0.0;
  for (std::size_t i = 0; i < rho1.size(); ++i) {
    const double s = rho1[i], r = rho2[i];
    if (s < 0.0 || r < 0.0) throw DomainError("kinetic identity needs nonnegative fields");
    rhs += s + r - 2.0 * std::min(s, r);
  }
  out.lhs = l1_distance(rho1, rho2);
  out.rhs = rhs * rho1.grid.cell_volume();
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double inverse_weighted(const Trajectory& tr, const NonlinearitySpec& spec) {
  const Grid& g = tr.grid;
  double total = 0.0;
  for (std::size_t n = 0; n + 1 < tr.states.size(); ++n) {
    const Field& r = tr.states[n];
    const double dt = tr.times[n + 1] - tr.times[n];
    double s = 0.0;
    for (int k = 0; k < g.d; ++k) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double a = std::max(r[i], 0.0), b = std::max(r[g.neighbor(i, k, +1)], 0.0);
        const double m = 0.5 * (a + b);
        if (m <= 0.0) continue;
        const double grad = (b - a) / g.h();
        s += spec.phi_prime(m) * grad * grad / m;
      }
    }
    total += dt * s * g.cell_volume();
  }
  return total;
}

}  // namespace

EntropyReport entropy_estimate_check(const std::vector<Trajectory>& runs, const EntropyBudgetInputs& b,
                                     const EntropyFunction& ent) {
  if (runs.empty()) throw ConfigError("entropy_estimate_check needs at least one trajectory");
  if (!(b.A > 0.0) || !(b.q >= 0.0 && b.q < 2.0) || !(b.theta > 0.0)) {
    throw ConfigError("entropy budget needs A > 0, q in [0, 2), theta > 0");
  }
  EntropyReport rep;
  rep.d = runs.front().grid.d;
  rep.n_runs = runs.size();
  std::vector<double> terms;
  for (const auto& tr : runs) {
    if (tr.diagnostics.empty()) throw ConfigError("trajectory carries no diagnostics");
    double sup_e = 0.0;
    for (const auto& d : tr.diagnostics) sup_e = std::max(sup_e, d.entropy);
    const double diss = tr.diagnostics.back().dissipation_cum;
    const double e0 = tr.diagnostics.front().entropy;
    const double qv = tr.eps * tr.a_norm_sq;
    const double l1 = tr.eps * b.divqv_l1;
    const double linf = tr.eps * b.divqv_linf;
    std::vector<double> t = {e0, 1.0};
    if (rep.d == 1) {
      t.push_back(qv);
      t.push_back(l1);
      t.push_back(std::pow(l1, 2.0 / (2.0 - b.q)));
    } else {
      t.push_back(std::sqrt(qv) / std::sqrt(b.A));
      t.push_back(qv / b.A);
      t.push_back(l1);
      t.push_back(std::pow(linf, b.theta));
    }
    double rhs = 0.0;
    for (double v : t) rhs += v;
    if (terms.empty()) terms.assign(t.size(), 0.0);
    for (std::size_t i = 0; i < t.size(); ++i) terms[i] += t[i];
    rep.sup_entropy += sup_e;
    rep.cumulative_dissipation += diss;
    rep.lhs += sup_e + diss;
    rep.initial_entropy += e0;
    rep.rhs_budget += rhs;
    if (!tr.states.empty()) rep.inverse_weighted_dissipation += inverse_weighted(tr, ent.spec());
  }
  const double n = static_cast<double>(runs.size());
  rep.sup_entropy /= n;
  rep.cumulative_dissipation /= n;
  rep.lhs /= n;
  rep.initial_entropy /= n;
  rep.rhs_budget /= n;
  rep.inverse_weighted_dissipation /= n;
  for (double& v : terms) v /= n;
  rep.rhs_terms = terms;
  rep.fitted_c = rep.lhs / rep.rhs_budget;
  return rep;
}

EntropyReport entropy_estimate_check(const Trajectory& run, const EntropyBudgetInputs& budget,
                                     const EntropyFunction& ent) {
  return entropy_estimate_check(std::vector<Trajectory>{run}, budget, ent);
}

// ---------------------------------------------------------------------------

namespace {

double tail_slope(double xi, double M) { return std::clamp(xi - M, 0.0, 1.0); }

bool in_band(double xi, double M) { return xi >= M && xi <= M + 1.0; }

}  // namespace

double tail_dissipation(const Trajectory& tr, const NonlinearitySpec& spec, double M) {
  if (tr.states.size() != tr.times.size()) throw ConfigError("measure tail needs recorded states");
  const Grid& g = tr.grid;
  const double scale = g.cell_volume() / (g.h() * g.h());
  double total = 0.0;
  std::vector<double> phi(g.size()), psi(g.size());
  for (std::size_t n = 0; n + 1 < tr.states.size(); ++n) {
    const Field& r = tr.states[n];
    const double dt = tr.times[n + 1] - tr.times[n];
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = std::max(r[i], 0.0);
      phi[i] = spec.phi(v);
      psi[i] = tail_slope(v, M);
    }
    double s = 0.0;
    for (int k = 0; k < g.d; ++k) {
      for (std::size_t i = 0; i < g.size(); ++i) {
        const std::size_t j = g.neighbor(i, k, +1);
        s += (psi[j] - psi[i]) * (phi[j] - phi[i]);
      }
    }
    total += dt * s * scale;
  }
  return total;
}

TailReport measure_tail(const Trajectory& tr, const NonlinearitySpec& spec, const Field& divqv, double M) {
  if (!(M > tr.gamma)) throw DomainError(fmt::format("measure tail needs M > gamma (M = {}, gamma = {})", M, tr.gamma));
  if (tr.states.empty()) throw ConfigError("measure tail needs recorded states");
  const bool noisy = tr.eps > 0.0 && !divqv.values.empty();
  if (noisy) require_same_grid(divqv.grid, tr.grid);
  const Grid& g = tr.grid;
  TailReport rep;
  rep.M = M;
  rep.n_runs = 1;
  rep.lhs = tail_dissipation(tr, spec, M);
  for (double v : tr.states.front().values) rep.initial_excess += std::max(v - M, 0.0);
  rep.initial_excess *= g.cell_volume();
  double noise = 0.0, noise_ito = 0.0;
  if (noisy) {
    for (std::size_t n = 0; n + 1 < tr.states.size(); ++n) {
      const Field& r = tr.states[n];
      const double dt = tr.times[n + 1] - tr.times[n];
      double s = 0.0, s_ito = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!in_band(r[i], M)) continue;
        s += divqv[i];
        const double sg = spec.sigma(std::max(r[i], 0.0));
        s_ito += 0.5 * sg * sg * divqv[i];
      }
      noise += dt * s;
      noise_ito += dt * s_ito;
    }
    noise *= tr.eps * g.cell_volume();
    noise_ito *= tr.eps * g.cell_volume();
  }
  rep.rhs = rep.initial_excess + noise;
  rep.rhs_ito = rep.initial_excess + noise_ito;
  return rep;
}

TailReport measure_tail(const std::vector<Trajectory>& runs, const NonlinearitySpec& spec, const Field& divqv,
                        double M) {
  if (runs.empty()) throw ConfigError("measure tail needs at least one trajectory");
  TailReport acc;
  acc.M = M;
  for (const auto& tr : runs) {
    const TailReport r = measure_tail(tr, spec, divqv, M);
    acc.lhs += r.lhs;
    acc.rhs += r.rhs;
    acc.rhs_ito += r.rhs_ito;
    acc.initial_excess += r.initial_excess;
  }
  const double n = static_cast<double>(runs.size());
  acc.n_runs = runs.size();
  acc.lhs /= n;
  acc.rhs /= n;
  acc.rhs_ito /= n;
  acc.initial_excess /= n;
  return acc;
}

VanishingReport vanishing_at_infinity_check(const Trajectory& traj, const NonlinearitySpec& spec,
                                            const std::vector<double>& M_list, double threshold) {
  if (M_list.empty()) throw ConfigError("vanishing check needs a non-empty M list");
  for (std::size_t i = 1; i < M_list.size(); ++i) {
    if (!(M_list[i] > M_list[i - 1])) throw ConfigError("M list must be strictly increasing");
  }
  VanishingReport rep;
  rep.M = M_list;
  rep.threshold = threshold;
  for (double M : M_list) rep.lhs.push_back(tail_dissipation(traj, spec, M));
  rep.monotone = true;
  for (std::size_t i = 1; i < rep.lhs.size(); ++i) {
    if (rep.lhs[i] > rep.lhs[i - 1] * (1.0 + 1e-12) + 1e-300) rep.monotone = false;
  }
  rep.pass = rep.monotone && rep.lhs.back() <= threshold;
  return rep;
}

}  // namespace fluctuo
