#include "fluctuo_cli/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "fluctuo/errors.hpp"

namespace fluctuo::cli {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
    throw ConfigError(fmt::format("{}: '{}' is not a number", key, raw));
  }
  return v;
}

template <typename U>
U parse_unsigned(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  U v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
    throw ConfigError(fmt::format("{}: '{}' is not a non-negative integer", key, raw));
  }
  return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& raw) {
  std::vector<double> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

std::string fmt_double(double v) { return fmt::format("{:.17g}", v); }

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt_double(v[i]);
  return s;
}

struct Binding {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

using Bindings = std::vector<std::pair<std::string, std::vector<Binding>>>;

template <typename Member>
Binding dbl(const std::string& key, Member member) {
  return {key, [=](RunConfig& c, const std::string& v) { std::invoke(member, c) = parse_double(key, v); },
          [=](const RunConfig& c) { return fmt_double(std::invoke(member, c)); }};
}

template <typename U, typename Member>
Binding uint(const std::string& key, Member member) {
  return {key, [=](RunConfig& c, const std::string& v) { std::invoke(member, c) = parse_unsigned<U>(key, v); },
          [=](const RunConfig& c) { return std::to_string(std::invoke(member, c)); }};
}

template <typename Member>
Binding str(const std::string& key, Member member, std::initializer_list<const char*> allowed = {}) {
  const std::vector<const char*> choices(allowed);
  return {key,
          [=](RunConfig& c, const std::string& v) {
            const std::string t = trim(v);
            if (!choices.empty()) {
              bool ok = false;
              for (const char* a : choices) ok = ok || t == a;
              if (!ok) {
                std::string list;
                for (const char* a : choices) list += (list.empty() ? "" : ", ") + std::string(a);
                throw ConfigError(fmt::format("{}: '{}' is not one of {}", key, t, list));
              }
            }
            std::invoke(member, c) = t;
          },
          [=](const RunConfig& c) { return std::invoke(member, c); }};
}

template <typename Member>
Binding list(const std::string& key, Member member) {
  return {key, [=](RunConfig& c, const std::string& v) { std::invoke(member, c) = parse_list(key, v); },
          [=](const RunConfig& c) { return fmt_list(std::invoke(member, c)); }};
}

std::vector<Binding> initial_bindings(InitialSection RunConfig::*sec) {
  return {
      str("kind", [=](auto& c) -> auto& { return (c.*sec).kind; }, {"gaussian", "cosine", "constant", "file"}),
      dbl("base", [=](auto& c) -> auto& { return (c.*sec).base; }),
      dbl("amplitude", [=](auto& c) -> auto& { return (c.*sec).amplitude; }),
      dbl("width", [=](auto& c) -> auto& { return (c.*sec).width; }),
      dbl("center", [=](auto& c) -> auto& { return (c.*sec).center; }),
      str("path", [=](auto& c) -> auto& { return (c.*sec).path; }),
  };
}

#define FIELD(expr) [](auto& c) -> auto& { return c.expr; }

const Bindings& bindings() {
  static const Bindings b = {
      {"nonlinearity",
       {str("family", FIELD(nonlinearity.family), {"power_law", "tabulated"}), dbl("m", FIELD(nonlinearity.m)),
        dbl("gamma", FIELD(nonlinearity.gamma)), dbl("c_nu", FIELD(nonlinearity.c_nu)),
        str("table", FIELD(nonlinearity.table))}},
      {"grid",
       {{"d", [](RunConfig& c, const std::string& v) { c.grid.d = static_cast<int>(parse_unsigned<unsigned>("d", v)); },
         [](const RunConfig& c) { return std::to_string(c.grid.d); }},
        uint<std::size_t>("N", FIELD(grid.N)), dbl("L", FIELD(grid.L))}},
      {"initial", initial_bindings(&RunConfig::initial)},
      {"initial2", initial_bindings(&RunConfig::initial2)},
      {"noise", {dbl("alpha", FIELD(noise.alpha)), dbl("A", FIELD(noise.A)), uint<std::uint64_t>("K_a", FIELD(noise.K_a))}},
      {"solver",
       {dbl("dt", FIELD(solver.dt)), dbl("eta", FIELD(solver.eta)), dbl("eps", FIELD(solver.eps)),
        dbl("cfl_safety", FIELD(solver.cfl_safety)),
        str("negativity_policy", FIELD(solver.negativity_policy), {"clamp_and_log", "reject"}),
        dbl("negativity_tol", FIELD(solver.negativity_tol)), uint<std::size_t>("output_stride", FIELD(solver.output_stride))}},
      {"run",
       {dbl("T", FIELD(run.T)), uint<std::uint64_t>("seed", FIELD(run.seed)), uint<std::size_t>("n_runs", FIELD(run.n_runs)),
        uint<unsigned>("threads", FIELD(run.threads))}},
      {"contract", {uint<std::size_t>("pairs", FIELD(contract.pairs)), dbl("tolerance", FIELD(contract.tolerance))}},
      {"control", {str("kind", FIELD(control.kind), {"zero", "potential"}), dbl("amplitude", FIELD(control.amplitude))}},
      {"ldp",
       {list("eps", FIELD(ldp.eps)), dbl("eps0", FIELD(ldp.eps0)), dbl("delta", FIELD(ldp.delta)),
        uint<std::size_t>("n_runs", FIELD(ldp.n_runs)), str("scheme", FIELD(ldp.scheme), {"forward", "centered"}),
        dbl("factor", FIELD(ldp.factor))}},
      {"diagnostics",
       {list("tail_M", FIELD(diagnostics.tail_M)), uint<std::size_t>("qv_samples", FIELD(diagnostics.qv_samples)),
        dbl("theta", FIELD(diagnostics.theta)), dbl("q", FIELD(diagnostics.q))}},
      {"assumptions",
       {dbl("xi_min", FIELD(assumptions.xi_min)), dbl("xi_max", FIELD(assumptions.xi_max)),
        uint<std::size_t>("n_points", FIELD(assumptions.n_points)), dbl("threshold", FIELD(assumptions.threshold))}},
  };
  return b;
}

#undef FIELD

}  // namespace

RunConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("config parse error: {}", e.message()));
  }
  RunConfig cfg;
  for (const auto& [name, node] : tree) {
    if (name == "schema" && node.empty()) {
      if (trim(node.data()) != kConfigSchema) {
        throw ConfigError(fmt::format("unsupported config schema '{}' (expected {})", node.data(), kConfigSchema));
      }
      continue;
    }
    if (node.empty() && !node.data().empty()) throw ConfigError(fmt::format("unknown top-level key '{}'", name));
    const auto& all = bindings();
    const auto sec = std::find_if(all.begin(), all.end(), [&](const auto& s) { return s.first == name; });
    if (sec == all.end()) throw ConfigError(fmt::format("unknown config section [{}]", name));
    for (const auto& [key, value] : node) {
      const auto b = std::find_if(sec->second.begin(), sec->second.end(), [&](const Binding& x) { return x.key == key; });
      if (b == sec->second.end()) throw ConfigError(fmt::format("unknown key '{}' in section [{}]", key, name));
      b->set(cfg, value.data());
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in);
}

void write_config(const RunConfig& cfg, std::ostream& out) {
  out << "schema = " << kConfigSchema << "\n";
  for (const auto& [section, keys] : bindings()) {
    out << "\n[" << section << "]\n";
    for (const auto& b : keys) out << b.key << " = " << b.get(cfg) << "\n";
  }
}

std::string to_ini(const RunConfig& cfg) {
  std::ostringstream s;
  write_config(cfg, s);
  return s.str();
}

// ---------------------------------------------------------------------------

Grid RunConfig::make_grid() const { return Grid(grid.d, grid.N, grid.L); }

NonlinearitySpec RunConfig::make_spec() const {
  if (nonlinearity.family == "tabulated") {
    if (nonlinearity.table.empty()) throw ConfigError("tabulated nonlinearity needs nonlinearity.table");
    return NonlinearitySpec::from_csv(nonlinearity.table, nonlinearity.gamma, nonlinearity.c_nu);
  }
  return NonlinearitySpec::power_law(nonlinearity.m, nonlinearity.gamma, nonlinearity.c_nu);
}

NoiseParams RunConfig::make_noise() const {
  return NoiseParams{.alpha = noise.alpha, .A = noise.A, .K_a = noise.K_a, .seed = run.seed};
}

SolverConfig RunConfig::make_solver() const {
  SolverConfig c;
  c.dt = solver.dt;
  c.eta = solver.eta;
  c.eps = solver.eps;
  c.cfl_safety = solver.cfl_safety;
  c.negativity_policy = parse_negativity_policy(solver.negativity_policy);
  c.negativity_tol = solver.negativity_tol;
  c.output_stride = solver.output_stride;
  return c;
}

Field RunConfig::make_initial(const InitialSection& s) const {
  const Grid g = make_grid();
  if (s.kind == "file") {
    if (s.path.empty()) throw ConfigError("initial kind 'file' needs a path");
    Field f = read_binary(s.path);
    require_same_grid(f.grid, g);
    f.gamma = nonlinearity.gamma;
    return f;
  }
  Field f(g, nonlinearity.gamma, s.base);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (s.kind == "gaussian") {
      double r2 = 0.0;
      for (int k = 0; k < g.d; ++k) r2 += std::pow(g.center(i, k) - s.center, 2);
      f[i] += s.amplitude * std::exp(-r2 / (2.0 * s.width * s.width));
    } else if (s.kind == "cosine") {
      double v = 1.0;
      for (int k = 0; k < g.d; ++k) v *= std::cos(std::numbers::pi * g.center(i, k) / g.L);
      f[i] += s.amplitude * v;
    } else if (s.kind != "constant") {
      throw ConfigError("unknown initial kind '" + s.kind + "'");
    }
  }
  if (f.min() < 0.0) throw ConfigError("initial density must be nonnegative");
  return f;
}

RateOptions RunConfig::make_rate_options() const {
  RateOptions o;
  o.scheme = parse_time_difference(ldp.scheme);
  return o;
}

}  // namespace fluctuo::cli
