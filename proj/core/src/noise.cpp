#include "fluctuo/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include "fluctuo/errors.hpp"
#include "fluctuo/rng.hpp"

namespace fluctuo {

double bump(double r2) { return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0; }

double bump_l2_sq(int d) {
  using boost::math::quadrature::gauss_kronrod;
  const double dd = d;
  const double sphere = 2.0 * std::pow(std::numbers::pi, 0.5 * dd) / std::tgamma(0.5 * dd);
  const auto w = [&](double r) { return sphere * std::pow(r, dd - 1.0); };
  const double mass = gauss_kronrod<double, 61>::integrate([&](double r) { return w(r) * bump(r * r); }, 0.0, 1.0);
  const double sq = gauss_kronrod<double, 61>::integrate(
      [&](double r) { return w(r) * bump(r * r) * bump(r * r); }, 0.0, 1.0);
  return sq / (mass * mass);
}

namespace {

double wrapped_offset(const Grid& g, std::size_t i) {
  return i < g.N / 2 ? static_cast<double>(i) : static_cast<double>(i) - static_cast<double>(g.N);
}

std::vector<double> sample_kernel(const Grid& grid, double alpha, int shift_axis) {
  const double h = grid.h();
  if (!(alpha >= 2.0 * h * (1.0 - 1e-12))) {
    throw ConfigError(fmt::format("kernel under-resolved: alpha = {} < 2h = {}", alpha, 2.0 * h));
  }
  if (!(alpha < grid.L / 4.0)) {
    throw ConfigError(fmt::format("kernel too wide: alpha = {} must be < L/4 = {}", alpha, grid.L / 4.0));
  }
  std::vector<double> k(grid.size(), 0.0);
  double sum = 0.0;
  for (std::size_t idx = 0; idx < grid.size(); ++idx) {
    const auto ij = grid.unflatten(idx);
    double r2 = 0.0;
    for (int a = 0; a < grid.d; ++a) {
      double x = wrapped_offset(grid, ij[static_cast<std::size_t>(a)]) * h;
      if (a == shift_axis) x += 0.5 * h;
      r2 += (x / alpha) * (x / alpha);
    }
    k[idx] = bump(r2);
    sum += k[idx];
  }
  const double norm = 1.0 / (sum * grid.cell_volume());
  for (double& v : k) v *= norm;
  return k;
}

std::vector<double> scaled(std::vector<double> v, double s) {
  for (double& x : v) x *= s;
  return v;
}

}  // namespace

std::vector<double> build_kernel(const Grid& grid, double alpha) { return sample_kernel(grid, alpha, -1); }

std::vector<double> build_face_kernel(const Grid& grid, double alpha, int axis) {
  return sample_kernel(grid, alpha, axis);
}

double kernel_l2_sq(const Grid& grid, const std::vector<double>& kernel) {
  double s = 0.0;
  for (double v : kernel) s += v * v;
  return s * grid.cell_volume();
}

// ---------------------------------------------------------------------------

NoiseModel::NoiseModel(const Grid& grid, const NoiseParams& params, bool allow_fft)
    : grid_(grid),
      params_(params),
      kernel_(build_kernel(grid, params.alpha)),
      cell_conv_(grid, scaled(kernel_, grid.cell_volume()), allow_fft) {
  if (!(params_.A > 0.0) || !std::isfinite(params_.A)) throw ConfigError("noise envelope rate A must be > 0");
  if (params_.K_a < 1) throw ConfigError("K_a must be >= 1");
  a_norm_sq_ = kernel_l2_sq(grid_, kernel_);
  a_effective_ = std::isnan(params_.a_norm_sq_override) ? a_norm_sq_ : params_.a_norm_sq_override;
  if (!(a_effective_ >= 0.0)) throw ConfigError("a_norm_sq override must be >= 0");
  for (int k = 0; k < grid_.d; ++k) {
    face_conv_.emplace_back(grid_, scaled(build_face_kernel(grid_, params_.alpha, k), grid_.cell_volume()),
                            allow_fft);
    auto& e = env_[static_cast<std::size_t>(k)];
    auto& ec = env_c_[static_cast<std::size_t>(k)];
    e.resize(grid_.size());
    ec.resize(grid_.size());
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      const double r2 = grid_.face_r2(i, k);
      e[i] = std::exp(-0.5 * params_.A * r2);
      ec[i] = std::sqrt(-std::expm1(-params_.A * r2));
    }
  }
  white_.resize(grid_.size());
  smooth_.resize(grid_.size());
}

double NoiseModel::a_linf() const { return std::sqrt(a_norm_sq_ / static_cast<double>(params_.K_a)); }

void NoiseModel::sample(double dt, std::uint64_t step, VectorField& dW) {
  if (!(dt > 0.0)) throw ConfigError("noise increment needs dt > 0");
  if (dW.grid != grid_) dW = VectorField(grid_);
  const Philox4x32 rng(params_.seed);
  const double w_scale = std::sqrt(dt / grid_.cell_volume());
  const double g_scale = std::sqrt(a_effective_ * dt);
  for (int k = 0; k < grid_.d; ++k) {
    const auto comp = static_cast<std::uint32_t>(k);
    for (std::size_t i = 0; i < grid_.size(); ++i) {
      white_[i] = w_scale * rng.normals(Philox4x32::counter(step, static_cast<std::uint32_t>(i), 0, comp))[0];
    }
    face_conv_[static_cast<std::size_t>(k)].apply(white_, smooth_);
    const double G = g_scale * rng.normals(Philox4x32::counter(step, 0, 1, comp))[0];
    const auto& e = env_[static_cast<std::size_t>(k)];
    const auto& ec = env_c_[static_cast<std::size_t>(k)];
    auto& out = dW[k];
    for (std::size_t i = 0; i < grid_.size(); ++i) out[i] = e[i] * smooth_[i] + ec[i] * G;
  }
}

VectorField NoiseModel::sample(double dt, std::uint64_t step) {
  VectorField dW(grid_);
  sample(dt, step, dW);
  return dW;
}

void NoiseModel::mollify(const std::vector<double>& in, std::vector<double>& out) { cell_conv_.apply(in, out); }

// ---------------------------------------------------------------------------

QvReport quadratic_variation(const Grid& grid, const NoiseParams& params, std::size_t n_samples, double dt,
                             std::uint64_t first_step) {
  if (n_samples < 100) throw ConfigError("quadratic_variation needs n_samples >= 100");
  NoiseModel model(grid, params);
  std::vector<double> acc(grid.size(), 0.0);
  VectorField dW(grid);
  for (std::size_t s = 0; s < n_samples; ++s) {
    model.sample(dt, first_step + s, dW);
    for (int k = 0; k < grid.d; ++k) {
      for (std::size_t i = 0; i < grid.size(); ++i) acc[i] += dW[k][i] * dW[k][i];
    }
  }
  QvReport rep;
  rep.qv = Field(grid, 0.0, 0.0);
  const double norm = 1.0 / (static_cast<double>(n_samples) * grid.d * dt);
  for (std::size_t i = 0; i < grid.size(); ++i) rep.qv[i] = acc[i] * norm;
  rep.min = rep.qv.min();
  rep.max = rep.qv.max();
  rep.mean = integrate(rep.qv) / (std::pow(2.0 * grid.L, grid.d));
  rep.spread = (rep.max - rep.min) / rep.mean;
  rep.a_norm_sq = model.a_norm_sq();
  rep.n_samples = n_samples;
  return rep;
}

DivQvReport div_quadratic_variation(const Grid& grid, const NoiseParams& params, std::size_t n_samples,
                                    double dt, std::uint64_t first_step) {
  if (n_samples < 100) throw ConfigError("div_quadratic_variation needs n_samples >= 100");
  NoiseModel model(grid, params);
  std::vector<double> acc(grid.size(), 0.0);
  VectorField dW(grid);
  for (std::size_t s = 0; s < n_samples; ++s) {
    model.sample(dt, first_step + s, dW);
    const Field div = divergence(dW);
    for (std::size_t i = 0; i < grid.size(); ++i) acc[i] += div[i] * div[i];
  }
  DivQvReport rep;
  rep.field = Field(grid, 0.0, 0.0);
  const double norm = 1.0 / (static_cast<double>(n_samples) * dt);
  for (std::size_t i = 0; i < grid.size(); ++i) rep.field[i] = acc[i] * norm;
  rep.l1 = integrate(rep.field);
  rep.linf = rep.field.max();
  rep.n_samples = n_samples;
  return rep;
}

// ---------------------------------------------------------------------------

std::string to_string(ScalingStatus s) {
  switch (s) {
    case ScalingStatus::pass:
      return "pass";
    case ScalingStatus::fail:
      return "fail";
    case ScalingStatus::insufficient:
      return "insufficient";
  }
  return "unknown";
}

ScalingReport scaling_regime_check(int d, const std::vector<ScalingEntry>& seq) {
  if (seq.empty()) throw ConfigError("scaling_regime_check needs a non-empty sequence");
  if (d < 1) throw ConfigError("scaling_regime_check needs d >= 1");
  ScalingReport rep;
  rep.d = d;
  const double c_kappa = bump_l2_sq(d);
  const double dd = d;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const auto& e = seq[i];
    if (!(e.eps > 0.0) || !(e.alpha > 0.0) || !(e.A > 0.0) || !(e.K_a >= 1.0)) {
      throw ConfigError(fmt::format("scaling entry {} has non-positive parameters", i));
    }
    if (i > 0 && !(e.eps < seq[i - 1].eps)) throw ConfigError("scaling sequence must have strictly decreasing eps");
    ScalingRow row;
    row.entry = e;
    row.a_linf_sq = c_kappa * std::pow(e.alpha, -dd) / e.K_a;
    row.first = d == 1 ? std::sqrt(row.a_linf_sq) : row.a_linf_sq * std::pow(e.A, 1.0 - (dd + 2.0) / 2.0);
    row.second = e.eps * std::pow(e.alpha, -dd - 2.0) * std::pow(e.A, -dd / 2.0);
    rep.rows.push_back(row);
  }
  if (rep.rows.size() < 2) return rep;
  const auto status = [&](auto get) {
    for (std::size_t i = 1; i < rep.rows.size(); ++i) {
      if (!(get(rep.rows[i]) < get(rep.rows[i - 1]))) return ScalingStatus::fail;
    }
    return ScalingStatus::pass;
  };
  rep.first_status = status([](const ScalingRow& r) { return r.first; });
  rep.second_status = status([](const ScalingRow& r) { return r.second; });
  return rep;
}

}  // namespace fluctuo
