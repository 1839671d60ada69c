#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "fluctuo/grid.hpp"

namespace fluctuo {

/// Space-time control g: face-staggered vector fields, piecewise constant in time on
/// [times[n], times[n+1]). Optionally carries a spatially constant vector per slice,
/// the direction seen by the far-field part of the noise.
class ControlField {
 public:
  ControlField() = default;
  ControlField(const Grid& grid, std::vector<double> times);
  static ControlField zero(const Grid& grid, double T, std::size_t n_slices = 1);

  const Grid& grid() const { return grid_; }
  const std::vector<double>& times() const { return times_; }
  std::size_t n_slices() const { return slices_.size(); }
  double duration(std::size_t n) const { return times_[n + 1] - times_[n]; }

  VectorField& slice(std::size_t n) { return slices_[n]; }
  const VectorField& slice(std::size_t n) const { return slices_[n]; }
  std::array<double, 2>& uniform(std::size_t n) { return uniform_[n]; }
  const std::array<double, 2>& uniform(std::size_t n) const { return uniform_[n]; }
  /// Index of the slice active at time t (clamped to the first/last slice).
  std::size_t slice_index(double t) const;

  /// 1/2 sum_n ||g_n||^2 h^d (t_{n+1} - t_n).
  double energy() const;
  /// Space-time L^2 distance sqrt(sum_n ||g_n - f_n||^2 h^d dt_n); slices must align.
  double l2_distance(const ControlField& other) const;
  double l2_norm() const;
  /// Multiplies every slice (and uniform vector) by s.
  ControlField scaled(double s) const;

  /// times.csv plus one slice_<n>.csv per slice.
  void write(const std::filesystem::path& dir) const;

 private:
  Grid grid_;
  std::vector<double> times_;
  std::vector<VectorField> slices_;
  std::vector<std::array<double, 2>> uniform_;
};

}  // namespace fluctuo
