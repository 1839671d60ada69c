#include "fluctuo/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "fluctuo/errors.hpp"

namespace fluctuo {

Grid::Grid(int d_, std::size_t N_, double L_) : d(d_), N(N_), L(L_) {
  if (d != 1 && d != 2) throw ConfigError("grid dimension must be 1 or 2");
  if (N < 4 || N % 2 != 0) throw ConfigError("grid N must be even and at least 4");
  if (!(L > 0.0) || !std::isfinite(L)) throw ConfigError("grid half-width L must be positive");
}

std::array<std::size_t, 2> Grid::unflatten(std::size_t idx) const {
  if (d == 1) return {idx, 0};
  return {idx / N, idx % N};
}

std::size_t Grid::neighbor(std::size_t idx, int axis, int shift) const {
  auto ij = unflatten(idx);
  auto& c = ij[static_cast<std::size_t>(axis)];
  c = shift > 0 ? (c + 1 == N ? 0 : c + 1) : (c == 0 ? N - 1 : c - 1);
  return flatten(ij[0], ij[1]);
}

double Grid::center(std::size_t idx, int axis) const {
  const auto ij = unflatten(idx);
  return -L + (static_cast<double>(ij[static_cast<std::size_t>(axis)]) + 0.5) * h();
}

double Grid::center_r2(std::size_t idx) const {
  double r2 = 0.0;
  for (int k = 0; k < d; ++k) {
    const double x = center(idx, k);
    r2 += x * x;
  }
  return r2;
}

double Grid::face_r2(std::size_t idx, int axis) const {
  double r2 = 0.0;
  for (int k = 0; k < d; ++k) {
    double x = center(idx, k);
    if (k == axis) x += 0.5 * h();
    r2 += x * x;
  }
  return r2;
}

Field::Field(const Grid& g, double gamma_, double fill) : grid(g), gamma(gamma_), values(g.size(), fill) {}

Field::Field(const Grid& g, double gamma_, std::vector<double> v)
    : grid(g), gamma(gamma_), values(std::move(v)) {
  if (values.size() != grid.size()) throw GridMismatch("field value count does not match grid size");
}

double Field::min() const { return *std::min_element(values.begin(), values.end()); }
double Field::max() const { return *std::max_element(values.begin(), values.end()); }

VectorField::VectorField(const Grid& g, double fill) : grid(g) {
  for (int k = 0; k < g.d; ++k) comp[static_cast<std::size_t>(k)].assign(g.size(), fill);
}

void require_same_grid(const Grid& a, const Grid& b) {
  if (a != b) {
    throw GridMismatch(fmt::format("grid mismatch: (d={}, N={}, L={}) vs (d={}, N={}, L={})", a.d, a.N,
                                   a.L, b.d, b.N, b.L));
  }
}

VectorField gradient(const Grid& g, const std::vector<double>& v) {
  if (v.size() != g.size()) throw GridMismatch("gradient: array size does not match grid");
  VectorField out(g);
  const double inv_h = 1.0 / g.h();
  for (int k = 0; k < g.d; ++k) {
    auto& c = out[k];
    for (std::size_t i = 0; i < g.size(); ++i) c[i] = (v[g.neighbor(i, k, +1)] - v[i]) * inv_h;
  }
  return out;
}

VectorField gradient(const Field& f) { return gradient(f.grid, f.values); }

Field divergence(const VectorField& v, double gamma) {
  const Grid& g = v.grid;
  Field out(g, gamma, 0.0);
  const double inv_h = 1.0 / g.h();
  for (int k = 0; k < g.d; ++k) {
    const auto& c = v[k];
    if (c.size() != g.size()) throw GridMismatch("divergence: component size does not match grid");
    for (std::size_t i = 0; i < g.size(); ++i) out[i] += (c[i] - c[g.neighbor(i, k, -1)]) * inv_h;
  }
  return out;
}

Field laplacian(const Field& f) { return divergence(gradient(f), f.gamma); }

double integrate(const Field& f) {
  double s = 0.0;
  for (double x : f.values) s += x;
  return s * f.grid.cell_volume();
}

double l1_distance(const Field& f, const Field& g) {
  require_same_grid(f.grid, g.grid);
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += std::abs(f[i] - g[i]);
  return s * f.grid.cell_volume();
}

double mass_excess(const Field& f) {
  double s = 0.0;
  for (double x : f.values) s += x - f.gamma;
  return s * f.grid.cell_volume();
}

double inner(const VectorField& u, const VectorField& v) {
  require_same_grid(u.grid, v.grid);
  double s = 0.0;
  for (int k = 0; k < u.grid.d; ++k) {
    for (std::size_t i = 0; i < u.grid.size(); ++i) s += u[k][i] * v[k][i];
  }
  return s * u.grid.cell_volume();
}

void write_csv(const Field& f, std::ostream& out) {
  const Grid& g = f.grid;
  out << (g.d == 1 ? "index,x,value\n" : "index,x,y,value\n");
  for (std::size_t i = 0; i < f.size(); ++i) {
    out << i << ',' << fmt::format("{:.17g}", g.center(i, 0)) << ',';
    if (g.d == 2) out << fmt::format("{:.17g}", g.center(i, 1)) << ',';
    out << fmt::format("{:.17g}", f[i]) << '\n';
  }
}

void write_csv(const Field& f, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  write_csv(f, out);
}

void write_csv(const VectorField& v, std::ostream& out) {
  const Grid& g = v.grid;
  out << (g.d == 1 ? "index,x,g0\n" : "index,x,y,g0,g1\n");
  for (std::size_t i = 0; i < g.size(); ++i) {
    out << i << ',' << fmt::format("{:.17g}", g.center(i, 0));
    if (g.d == 2) out << ',' << fmt::format("{:.17g}", g.center(i, 1));
    for (int k = 0; k < g.d; ++k) out << ',' << fmt::format("{:.17g}", v[k][i]);
    out << '\n';
  }
}

namespace {

static_assert(std::endian::native == std::endian::little, "binary field format assumes little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw ConfigError("truncated binary field");
  return value;
}

}  // namespace

void write_binary(const Field& f, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  put<std::int64_t>(out, f.grid.d);
  put<std::int64_t>(out, static_cast<std::int64_t>(f.grid.N));
  put<double>(out, f.grid.L);
  put<double>(out, f.gamma);
  out.write(reinterpret_cast<const char*>(f.values.data()),
            static_cast<std::streamsize>(f.values.size() * sizeof(double)));
}

Field read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  const auto d = get<std::int64_t>(in);
  const auto N = get<std::int64_t>(in);
  const auto L = get<double>(in);
  const auto gamma = get<double>(in);
  if (N <= 0) throw ConfigError("corrupt binary field header");
  Grid g(static_cast<int>(d), static_cast<std::size_t>(N), L);
  std::vector<double> v(g.size());
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!in) throw ConfigError("truncated binary field");
  return Field(g, gamma, std::move(v));
}

}  // namespace fluctuo
