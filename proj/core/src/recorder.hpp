#pragma once

#include <algorithm>
#include <limits>

#include "fluctuo/diagnostics.hpp"
#include "fluctuo/solver.hpp"

namespace fluctuo::detail {

/// Appends per-step diagnostics and strided states to a trajectory.
struct Recorder {
  const EntropyFunction* ent;
  const NonlinearitySpec* spec;
  const SolverConfig* config;
  std::size_t n_steps;

  void init(Trajectory& tr, const Field& rho0, double dt, double eps, double qv, std::uint64_t seed) const {
    tr.grid = rho0.grid;
    tr.gamma = rho0.gamma;
    tr.dt = dt;
    tr.eps = eps;
    tr.a_norm_sq = qv;
    tr.seed = seed;
    tr.min_rho_seen = rho0.min();
    tr.diagnostics.reserve(config->record_diagnostics ? n_steps + 1 : 0);
    record(tr, 0, 0.0, rho0, std::numeric_limits<double>::quiet_NaN());
  }

  void record(Trajectory& tr, std::size_t step, double t, const Field& rho, double l1_ref) const {
    tr.min_rho_seen = std::min(tr.min_rho_seen, rho.min());
    if (config->record_diagnostics) {
      StepDiagnostics d;
      d.t = t;
      d.mass_excess = mass_excess(rho);
      d.entropy = entropy_of(rho, *ent);
      d.dissipation = dissipation_of(rho, *spec);
      d.dissipation_cum = tr.diagnostics.empty()
                              ? 0.0
                              : tr.diagnostics.back().dissipation_cum + (t - tr.diagnostics.back().t) *
                                                                            tr.diagnostics.back().dissipation;
      d.min_rho = rho.min();
      d.l1_to_reference = l1_ref;
      tr.diagnostics.push_back(d);
    }
    const bool keep = step == 0 || step == n_steps || step % config->output_stride == 0;
    if (keep) {
      tr.times.push_back(t);
      if (config->record_states) tr.states.push_back(rho);
    }
  }
};

}  // namespace fluctuo::detail
