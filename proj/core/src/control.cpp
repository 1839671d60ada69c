#include "fluctuo/control.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "fluctuo/errors.hpp"

namespace fluctuo {

ControlField::ControlField(const Grid& grid, std::vector<double> times) : grid_(grid), times_(std::move(times)) {
  if (times_.size() < 2) throw ConfigError("control field needs at least two time knots");
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (!(times_[i] > times_[i - 1])) throw ConfigError("control time knots must be strictly increasing");
  }
  slices_.assign(times_.size() - 1, VectorField(grid_));
  uniform_.assign(times_.size() - 1, {0.0, 0.0});
}

ControlField ControlField::zero(const Grid& grid, double T, std::size_t n_slices) {
  if (!(T > 0.0) || n_slices == 0) throw ConfigError("zero control needs T > 0 and at least one slice");
  std::vector<double> t(n_slices + 1);
  for (std::size_t i = 0; i <= n_slices; ++i) t[i] = T * static_cast<double>(i) / static_cast<double>(n_slices);
  return ControlField(grid, std::move(t));
}

std::size_t ControlField::slice_index(double t) const {
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return 0;
  return std::min(static_cast<std::size_t>(it - times_.begin()) - 1, slices_.size() - 1);
}

double ControlField::energy() const { return 0.5 * l2_norm() * l2_norm(); }

double ControlField::l2_norm() const {
  double s = 0.0;
  for (std::size_t n = 0; n < slices_.size(); ++n) s += inner(slices_[n], slices_[n]) * duration(n);
  return std::sqrt(s);
}

double ControlField::l2_distance(const ControlField& other) const {
  require_same_grid(grid_, other.grid_);
  if (other.times_.size() != times_.size()) throw GridMismatch("control fields have different time grids");
  double s = 0.0;
  for (std::size_t n = 0; n < slices_.size(); ++n) {
    VectorField diff(grid_);
    for (int k = 0; k < grid_.d; ++k) {
      for (std::size_t i = 0; i < grid_.size(); ++i) diff[k][i] = slices_[n][k][i] - other.slices_[n][k][i];
    }
    s += inner(diff, diff) * duration(n);
  }
  return std::sqrt(s);
}

ControlField ControlField::scaled(double s) const {
  ControlField out = *this;
  for (std::size_t n = 0; n < out.slices_.size(); ++n) {
    for (int k = 0; k < grid_.d; ++k) {
      for (double& v : out.slices_[n][k]) v *= s;
    }
    for (double& v : out.uniform_[n]) v *= s;
  }
  return out;
}

void ControlField::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  std::ofstream t(dir / "times.csv");
  if (!t) throw ConfigError("cannot write " + (dir / "times.csv").string());
  t << "slice,t_start,t_end,ubar0,ubar1\n";
  for (std::size_t n = 0; n < slices_.size(); ++n) {
    t << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}\n", n, times_[n], times_[n + 1], uniform_[n][0],
                     uniform_[n][1]);
    std::ofstream s(dir / fmt::format("slice_{}.csv", n));
    write_csv(slices_[n], s);
  }
}

}  // namespace fluctuo
