#include "fluctuo_cli/commands.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "fluctuo/diagnostics.hpp"
#include "fluctuo/errors.hpp"
#include "fluctuo/ldp.hpp"
#include "fluctuo/log.hpp"
#include "fluctuo/parallel.hpp"
#include "fluctuo/skeleton.hpp"
#include "fluctuo_cli/config.hpp"

namespace fluctuo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Context {
  RunConfig cfg;
  CliOptions opt;
  json summary;

  fs::path path(const std::string& name) const { return opt.out / name; }
};

/// Finite doubles as numbers, the rest as strings JSON can carry.
json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

json grid_json(const Grid& g) { return {{"d", g.d}, {"N", g.N}, {"L", g.L}}; }

void write_state(const Field& f, const fs::path& stem, const std::string& format) {
  if (format == "binary") {
    write_binary(f, fs::path(stem).replace_extension(".bin"));
  } else if (format == "csv") {
    write_csv(f, fs::path(stem).replace_extension(".csv"));
  } else {
    std::ofstream out(fs::path(stem).replace_extension(".json"));
    out << json{{"grid", grid_json(f.grid)}, {"gamma", f.gamma}, {"values", f.values}}.dump() << "\n";
  }
}

void write_diagnostics(const Trajectory& tr, const fs::path& p) {
  std::ofstream out(p);
  write_diagnostics_csv(tr, out);
}

std::vector<double> potential(const Grid& g, double amplitude) {
  std::vector<double> phi(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    double v = amplitude;
    for (int k = 0; k < g.d; ++k) v *= std::sin(std::numbers::pi * g.center(i, k) / g.L);
    phi[i] = v;
  }
  return phi;
}

/// Skeleton path driven by the configured control; every step recorded when `dense`.
std::pair<Trajectory, ControlField> control_path(const Context& ctx, bool dense) {
  const auto spec = ctx.cfg.make_spec();
  SolverConfig sc = ctx.cfg.make_solver();
  if (dense) sc.output_stride = 1;
  const Field rho0 = ctx.cfg.make_initial(ctx.cfg.initial);
  const auto phi = potential(rho0.grid, ctx.cfg.control.kind == "zero" ? 0.0 : ctx.cfg.control.amplitude);
  return solve_skeleton_feedback(
      rho0, spec, [&](double, const Field& r) { return gradient_feedback(r, spec, phi); }, ctx.cfg.run.T, sc);
}

unsigned threads(const Context& ctx) { return std::max(1u, ctx.cfg.run.threads); }

// ---------------------------------------------------------------------------

int cmd_simulate(Context& ctx) {
  const auto spec = ctx.cfg.make_spec();
  const Field rho0 = ctx.cfg.make_initial(ctx.cfg.initial);
  const Trajectory tr =
      solve(rho0, spec, ctx.cfg.make_noise(), ctx.cfg.make_solver(), ctx.cfg.run.T, ctx.cfg.run.seed);
  write_diagnostics(tr, ctx.path("diagnostics.csv"));
  const fs::path states = ctx.path("states");
  fs::create_directories(states);
  {
    std::ofstream times(states / "times.csv");
    times << "index,t\n";
    for (std::size_t n = 0; n < tr.states.size(); ++n) {
      times << n << "," << fmt::format("{:.17g}", tr.times[n]) << "\n";
      write_state(tr.states[n], states / fmt::format("state_{:06d}", n), ctx.opt.format);
    }
  }
  const auto& last = tr.diagnostics.back();
  ctx.summary["steps"] = tr.diagnostics.size() - 1;
  ctx.summary["t_final"] = last.t;
  ctx.summary["dt"] = tr.dt;
  ctx.summary["a_norm_sq"] = tr.a_norm_sq;
  ctx.summary["mass_excess_initial"] = tr.diagnostics.front().mass_excess;
  ctx.summary["mass_excess_final"] = last.mass_excess;
  ctx.summary["entropy_initial"] = tr.diagnostics.front().entropy;
  ctx.summary["entropy_final"] = last.entropy;
  ctx.summary["dissipation_cum"] = last.dissipation_cum;
  ctx.summary["min_rho"] = tr.min_rho_seen;
  ctx.summary["clamp_events"] = tr.clamp_events;
  ctx.summary["clamped_mass"] = tr.clamped_mass;
  ctx.summary["snapshots"] = tr.states.size();
  return kExitPass;
}

int cmd_contract(Context& ctx) {
  const auto spec = ctx.cfg.make_spec();
  const Field a = ctx.cfg.make_initial(ctx.cfg.initial);
  const Field b = ctx.cfg.make_initial(ctx.cfg.initial2);
  SolverConfig sc = ctx.cfg.make_solver();
  sc.record_states = false;
  const std::size_t pairs = std::max<std::size_t>(ctx.cfg.contract.pairs, 1);
  std::vector<double> ratio(pairs, 0.0);
  const double d0 = l1_distance(a, b);
  if (!(d0 > 0.0)) throw ConfigError("contract-test needs two distinct initial densities");
  parallel_for(pairs, threads(ctx), [&](std::size_t p) {
    const auto [t1, t2] = coupled_solve(a, b, spec, ctx.cfg.make_noise(), sc, ctx.cfg.run.T, ctx.cfg.run.seed + p);
    double worst = 0.0;
    for (const auto& d : t1.diagnostics) worst = std::max(worst, d.l1_to_reference / d0);
    ratio[p] = worst;
  });
  std::ofstream csv(ctx.path("contract.csv"));
  csv << "pair,seed,max_ratio\n";
  std::size_t ok = 0;
  double worst = 0.0;
  for (std::size_t p = 0; p < pairs; ++p) {
    csv << p << "," << ctx.cfg.run.seed + p << "," << fmt::format("{:.17g}", ratio[p]) << "\n";
    worst = std::max(worst, ratio[p]);
    if (ratio[p] <= ctx.cfg.contract.tolerance) ++ok;
  }
  ctx.summary["initial_distance"] = d0;
  ctx.summary["pairs"] = pairs;
  ctx.summary["max_ratio"] = worst;
  ctx.summary["tolerance"] = ctx.cfg.contract.tolerance;
  ctx.summary["pairs_within_tolerance"] = ok;
  ctx.summary["pass"] = ok == pairs;
  return ok == pairs ? kExitPass : kExitFail;
}

int cmd_entropy(Context& ctx) {
  const auto spec = ctx.cfg.make_spec();
  const EntropyFunction ent(spec);
  const Field rho0 = ctx.cfg.make_initial(ctx.cfg.initial);
  const SolverConfig sc = ctx.cfg.make_solver();
  const NoiseParams np = ctx.cfg.make_noise();
  const std::size_t n = std::max<std::size_t>(ctx.cfg.run.n_runs, 1);
  std::vector<Trajectory> runs(n);
  parallel_for(n, threads(ctx), [&](std::size_t r) {
    runs[r] = solve(rho0, spec, np, sc, ctx.cfg.run.T, ctx.cfg.run.seed + r);
  });
  DivQvReport divqv;
  if (sc.eps > 0.0) {
    divqv = div_quadratic_variation(rho0.grid, np, std::max<std::size_t>(ctx.cfg.diagnostics.qv_samples, 100),
                                    sc.dt);
  }
  const EntropyBudgetInputs budget{.divqv_l1 = divqv.l1,
                                   .divqv_linf = divqv.linf,
                                   .A = np.A,
                                   .theta = ctx.cfg.diagnostics.theta,
                                   .q = ctx.cfg.diagnostics.q};
  const EntropyReport rep = entropy_estimate_check(runs, budget, ent);
  ctx.summary["n_runs"] = n;
  ctx.summary["entropy"] = {{"lhs", rep.lhs},
                            {"sup_entropy", rep.sup_entropy},
                            {"cumulative_dissipation", rep.cumulative_dissipation},
                            {"initial_entropy", rep.initial_entropy},
                            {"rhs_budget", rep.rhs_budget},
                            {"rhs_terms", rep.rhs_terms},
                            {"fitted_c", num(rep.fitted_c)},
                            {"inverse_weighted_dissipation", rep.inverse_weighted_dissipation}};
  ctx.summary["divqv_l1"] = divqv.l1;
  ctx.summary["divqv_linf"] = divqv.linf;
  bool pass = std::isfinite(rep.fitted_c);
  json tails = json::array();
  std::ofstream csv(ctx.path("tail.csv"));
  csv << "M,lhs,rhs,rhs_ito,initial_excess\n";
  for (double M : ctx.cfg.diagnostics.tail_M) {
    if (!(M > spec.gamma())) continue;
    const TailReport t = measure_tail(runs, spec, divqv.field, M);
    tails.push_back({{"M", M}, {"lhs", t.lhs}, {"rhs", t.rhs}, {"rhs_ito", t.rhs_ito}, {"initial_excess", t.initial_excess}});
    csv << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", M, t.lhs, t.rhs, t.rhs_ito, t.initial_excess);
    if (t.lhs > 1.1 * t.rhs) pass = false;
  }
  ctx.summary["measure_tail"] = tails;
  for (std::size_t r = 0; r < std::min<std::size_t>(n, 1); ++r) write_diagnostics(runs[r], ctx.path("diagnostics_run0.csv"));
  ctx.summary["pass"] = pass;
  return pass ? kExitPass : kExitFail;
}

int cmd_noise_qv(Context& ctx) {
  const Grid g = ctx.cfg.make_grid();
  const NoiseParams np = ctx.cfg.make_noise();
  const std::size_t n = std::max<std::size_t>(ctx.cfg.diagnostics.qv_samples, 100);
  const QvReport qv = quadratic_variation(g, np, n, ctx.cfg.solver.dt);
  const DivQvReport dq = div_quadratic_variation(g, np, n, ctx.cfg.solver.dt);
  write_csv(qv.qv, ctx.path("qv.csv"));
  write_csv(dq.field, ctx.path("div_qv.csv"));
  const double rel = std::abs(qv.mean - qv.a_norm_sq) / qv.a_norm_sq;
  const bool pass = qv.spread <= 0.05 && rel <= 0.05;
  ctx.summary["n_samples"] = n;
  ctx.summary["qv_mean"] = qv.mean;
  ctx.summary["qv_min"] = qv.min;
  ctx.summary["qv_max"] = qv.max;
  ctx.summary["qv_spread"] = qv.spread;
  ctx.summary["a_norm_sq"] = qv.a_norm_sq;
  ctx.summary["qv_rel_error"] = rel;
  ctx.summary["divqv_l1"] = dq.l1;
  ctx.summary["divqv_linf"] = dq.linf;
  ctx.summary["pass"] = pass;
  return pass ? kExitPass : kExitFail;
}

std::vector<ScalingEntry> read_sequence(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open scaling sequence " + p.string());
  std::string line;
  std::vector<ScalingEntry> seq;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (lineno == 1 && line.find_first_of("abcdfghijklmnopqrstuvwxyzAK") != std::string::npos &&
        line.find("eps") != std::string::npos) {
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw ConfigError(fmt::format("{}:{}: '{}' is not a number", p.string(), lineno, cell));
      }
    }
    if (v.size() != 4) throw ConfigError(fmt::format("{}:{}: expected eps,alpha,A,K_a", p.string(), lineno));
    seq.push_back({v[0], v[1], v[2], v[3]});
  }
  return seq;
}

int cmd_scaling(Context& ctx) {
  if (ctx.opt.sequence.empty()) throw ConfigError("scaling-check needs --sequence");
  const auto seq = read_sequence(ctx.opt.sequence);
  const ScalingReport rep = scaling_regime_check(ctx.opt.d, seq);
  std::ofstream csv(ctx.path("scaling.csv"));
  csv << "eps,alpha,A,K_a,a_linf_sq,first,second\n";
  json rows = json::array();
  for (const auto& r : rep.rows) {
    csv << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.entry.eps, r.entry.alpha,
                       r.entry.A, r.entry.K_a, r.a_linf_sq, r.first, r.second);
    rows.push_back({{"eps", r.entry.eps},
                    {"alpha", r.entry.alpha},
                    {"A", r.entry.A},
                    {"K_a", r.entry.K_a},
                    {"a_linf_sq", r.a_linf_sq},
                    {"first", r.first},
                    {"second", r.second}});
  }
  ctx.summary["d"] = rep.d;
  ctx.summary["rows"] = rows;
  ctx.summary["first_status"] = to_string(rep.first_status);
  ctx.summary["second_status"] = to_string(rep.second_status);
  ctx.summary["pass"] = rep.pass();
  if (rep.first_status == ScalingStatus::insufficient) return kExitUsage;
  return rep.pass() ? kExitPass : kExitFail;
}

int cmd_skeleton(Context& ctx) {
  const auto spec = ctx.cfg.make_spec();
  const auto [tr, control] = control_path(ctx, false);
  const SkeletonEntropy se = skeleton_entropy_check(tr, control, EntropyFunction(spec));
  const double residual = weak_form_residual(tr, control, spec);
  write_diagnostics(tr, ctx.path("diagnostics.csv"));
  write_state(tr.states.back(), ctx.path("final_state"), ctx.opt.format);
  ctx.summary["control_energy"] = control.energy();
  ctx.summary["entropy_lhs"] = se.lhs;
  ctx.summary["entropy_rhs"] = se.rhs;
  ctx.summary["fitted_c"] = num(se.fitted_c);
  ctx.summary["degenerate"] = se.degenerate;
  ctx.summary["weak_form_residual"] = residual;
  ctx.summary["mass_excess_final"] = tr.diagnostics.back().mass_excess;
  ctx.summary["steps"] = tr.diagnostics.size() - 1;
  return kExitPass;
}

void write_energy_density(const ControlField& c, const fs::path& p) {
  const Grid& g = c.grid();
  std::ofstream out(p);
  out << "slice,t,index,x,y,energy_density\n";
  for (std::size_t n = 0; n < c.n_slices(); ++n) {
    const VectorField& s = c.slice(n);
    for (std::size_t i = 0; i < g.size(); ++i) {
      double e = 0.0;
      for (int k = 0; k < g.d; ++k) e += s[k][i] * s[k][i];
      out << fmt::format("{},{:.17g},{},{:.17g},{:.17g},{:.17g}\n", n, c.times()[n], i, g.center(i, 0),
                         g.d == 2 ? g.center(i, 1) : 0.0, 0.5 * e);
    }
  }
}

int cmd_rate(Context& ctx) {
  const auto spec = ctx.cfg.make_spec();
  const auto [target, control] = control_path(ctx, true);
  const RateEvaluation ev = minimal_control(target, spec, ctx.cfg.make_rate_options());
  write_energy_density(ev.control, ctx.path("control_energy_density.csv"));
  ctx.summary["rate"] = ev.rate;
  ctx.summary["residual_max"] = ev.residual_max;
  ctx.summary["floor"] = ev.floor;
  ctx.summary["grid"] = grid_json(target.grid);
  ctx.summary["control_energy_density"] = ctx.path("control_energy_density.csv").string();
  ctx.summary["driving_control_energy"] = control.energy();
  ctx.summary["cg_iterations"] = ev.cg_iterations;
  return kExitPass;
}

int cmd_mc_ldp(Context& ctx) {
  const auto spec = ctx.cfg.make_spec();
  const auto [target, control] = control_path(ctx, true);
  const double rate = minimal_control(target, spec, ctx.cfg.make_rate_options()).rate;
  const auto levels = small_noise_levels(ctx.cfg.make_noise(), ctx.cfg.ldp.eps0, ctx.cfg.ldp.eps);
  SolverConfig sc = ctx.cfg.make_solver();
  const McReport rep = mc_small_noise(ctx.cfg.make_initial(ctx.cfg.initial), target, spec, levels, sc,
                                      std::max<std::size_t>(ctx.cfg.ldp.n_runs, 1), ctx.cfg.ldp.delta, rate,
                                      ctx.cfg.run.seed, threads(ctx), ctx.cfg.ldp.factor);
  std::ofstream csv(ctx.path("mc_ldp.csv"));
  csv << "eps,n_runs,hits,p,neg_eps_log_p,lower_bound_only,mean_sup_distance\n";
  json entries = json::array();
  for (const auto& e : rep.entries) {
    csv << fmt::format("{:.17g},{},{},{:.17g},{:.17g},{},{:.17g}\n", e.eps, e.n_runs, e.hits, e.p, e.neg_eps_log_p,
                       e.lower_bound_only ? 1 : 0, e.mean_sup_distance);
    entries.push_back({{"eps", e.eps},
                       {"n_runs", e.n_runs},
                       {"hits", e.hits},
                       {"p", e.p},
                       {"neg_eps_log_p", num(e.neg_eps_log_p)},
                       {"lower_bound_only", e.lower_bound_only},
                       {"mean_sup_distance", e.mean_sup_distance}});
  }
  ctx.summary["rate"] = rate;
  ctx.summary["tube_radius"] = rep.tube_radius;
  ctx.summary["entries"] = entries;
  ctx.summary["increasing"] = rep.increasing;
  ctx.summary["within_factor"] = rep.within_factor;
  ctx.summary["factor"] = rep.factor;
  const bool pass = rep.increasing && rep.within_factor;
  ctx.summary["pass"] = pass;
  return pass ? kExitPass : kExitFail;
}

int cmd_assumptions(Context& ctx) {
  const auto& a = ctx.cfg.assumptions;
  const AssumptionReport rep = check_assumptions(ctx.cfg.make_spec(), assumption_grid(a.xi_min, a.xi_max, a.n_points),
                                                 a.threshold);
  json items = json::array();
  for (const auto& it : rep.items) {
    items.push_back({{"name", it.name},
                     {"value", num(it.value)},
                     {"threshold", num(it.threshold)},
                     {"pass", it.pass},
                     {"note", it.note}});
  }
  ctx.summary["items"] = items;
  ctx.summary["pass"] = rep.all_pass();
  return rep.all_pass() ? kExitPass : kExitFail;
}

const std::map<std::string, std::function<int(Context&)>>& table() {
  static const std::map<std::string, std::function<int(Context&)>> t = {
      {"simulate", cmd_simulate},       {"contract-test", cmd_contract}, {"entropy-report", cmd_entropy},
      {"noise-qv", cmd_noise_qv},       {"scaling-check", cmd_scaling},  {"skeleton", cmd_skeleton},
      {"rate", cmd_rate},               {"mc-ldp", cmd_mc_ldp},          {"assumptions", cmd_assumptions},
  };
  return t;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"simulate",      "contract-test", "entropy-report",
                                                 "noise-qv",      "scaling-check", "skeleton",
                                                 "rate",          "mc-ldp",        "assumptions"};
  return names;
}

int run_command(const std::string& name, const CliOptions& options, std::ostream& out, std::ostream& err) {
  Context ctx;
  ctx.opt = options;
  ctx.summary = {{"schema_version", kSummarySchemaVersion}, {"command", name}};
  const auto fail = [&](int code, const std::string& kind, const std::string& msg) {
    err << "fluctuo " << name << ": " << msg << "\n";
    ctx.summary["status"] = "error";
    ctx.summary["error"] = {{"kind", kind}, {"message", msg}};
    out << ctx.summary.dump(2) << "\n";
    return code;
  };
  const auto it = table().find(name);
  if (it == table().end()) return fail(kExitUsage, "usage", "unknown subcommand '" + name + "'");
  try {
    if (options.format != "csv" && options.format != "json" && options.format != "binary") {
      throw ConfigError("--format must be csv, json or binary");
    }
    if (!options.config.empty()) ctx.cfg = load_config(options.config);
    if (options.seed) ctx.cfg.run.seed = *options.seed;
    if (options.threads) ctx.cfg.run.threads = *options.threads;
    fs::create_directories(options.out);
    {
      std::ofstream resolved(ctx.path("config.ini"));
      write_config(ctx.cfg, resolved);
    }
    ctx.summary["config"] = ctx.path("config.ini").string();
    ctx.summary["seed"] = ctx.cfg.run.seed;
    ctx.summary["threads"] = ctx.cfg.run.threads;
    const int code = it->second(ctx);
    ctx.summary["status"] = code == kExitPass ? "pass" : code == kExitFail ? "fail" : "error";
    ctx.summary["exit_code"] = code;
    {
      std::ofstream s(ctx.path("summary.json"));
      s << ctx.summary.dump(2) << "\n";
    }
    out << ctx.summary.dump(2) << "\n";
    return code;
  } catch (const ConfigError& e) {
    return fail(kExitUsage, "config", e.what());
  } catch (const GridMismatch& e) {
    return fail(kExitUsage, "config", e.what());
  } catch (const CflViolation& e) {
    return fail(kExitUsage, "config", e.what());
  } catch (const DomainError& e) {
    return fail(kExitUsage, "domain", e.what());
  } catch (const NegativityError& e) {
    return fail(kExitFail, "negativity", e.what());
  } catch (const SolverError& e) {
    return fail(kExitFail, "solver", e.what());
  } catch (const std::exception& e) {
    return fail(kExitUsage, "error", e.what());
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  init_logging();
  CLI::App app{"fluctuo: conservative stochastic PDE solver and diagnostics"};
  app.require_subcommand(1, 1);
  CliOptions opt;
  std::uint64_t seed = 0;
  unsigned nthreads = 1;
  std::map<std::string, CLI::App*> subs;
  const std::map<std::string, std::string> about = {
      {"simulate", "Run the stochastic solver and write snapshots and diagnostics"},
      {"contract-test", "Coupled runs from two initial data; check the L1 contraction ratio"},
      {"entropy-report", "Ensemble entropy budget and measure-tail estimate"},
      {"noise-qv", "Empirical quadratic variation of the noise and of its divergence"},
      {"scaling-check", "Check a noise parameter sequence against the scaling regime"},
      {"skeleton", "Solve the controlled skeleton equation with feedback control"},
      {"rate", "Rate function of a skeleton target via minimal-norm control"},
      {"mc-ldp", "Monte Carlo small-noise probabilities around a target path"},
      {"assumptions", "Check the nonlinearity against the structural assumptions"},
  };
  for (const auto& name : subcommands()) {
    CLI::App* s = app.add_subcommand(name, about.at(name));
    s->add_option("--config", opt.config, "INI configuration file");
    s->add_option("--out", opt.out, "Output directory");
    s->add_option("--seed", seed, "RNG seed (overrides run.seed)");
    s->add_option("--threads", nthreads, "Worker threads (1 is the reproducible reference mode)");
    s->add_option("--format", opt.format, "State snapshot format")->check(CLI::IsMember({"csv", "json", "binary"}));
    if (name == "scaling-check") {
      s->add_option("--d", opt.d, "Spatial dimension")->check(CLI::Range(1, 3));
      s->add_option("--sequence", opt.sequence, "CSV with columns eps,alpha,A,K_a")->required();
    }
    subs[name] = s;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return kExitUsage;
  }
  for (const auto& [name, s] : subs) {
    if (!s->parsed()) continue;
    if (s->count("--seed")) opt.seed = seed;
    if (s->count("--threads")) opt.threads = nthreads;
    return run_command(name, opt, out, err);
  }
  return kExitUsage;
}

}  // namespace fluctuo::cli
