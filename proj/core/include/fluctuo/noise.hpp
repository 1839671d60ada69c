#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fluctuo/convolution.hpp"
#include "fluctuo/grid.hpp"

namespace fluctuo {

/// Noise parameters: kernel scale alpha, envelope rate A, number K_a of nonzero
/// coefficients a_k, and the RNG seed.
struct NoiseParams {
  double alpha = 0.5;
  double A = 0.5;
  std::uint64_t K_a = 1;
  std::uint64_t seed = 1;
  /// Debug only: replaces ||a||^2 in the constant-noise term. NaN means "use ||kappa^alpha||^2".
  double a_norm_sq_override = std::numeric_limits<double>::quiet_NaN();
};

/// Unit-scale bump kappa(x) proportional to exp(-1/(1-|x|^2)) on |x| < 1 (not normalized).
double bump(double r2);
/// Continuum ||kappa||_{L^2}^2 of the unit bump normalized to integral one in dimension d.
double bump_l2_sq(int d);

/// kappa^alpha sampled at cell-center offsets (wrapped index layout), normalized so that
/// sum kappa h^d = 1. Requires 2h <= alpha < L/4.
std::vector<double> build_kernel(const Grid& grid, double alpha);
/// Same kernel sampled at offsets shifted by half a cell along `axis`, normalized likewise.
std::vector<double> build_face_kernel(const Grid& grid, double alpha, int axis);
/// Discrete ||kappa^alpha||^2 = sum kappa^2 h^d.
double kernel_l2_sq(const Grid& grid, const std::vector<double>& kernel);

/// Samples increments of the noise on the faces of a grid:
///   dW = exp(-A|x|^2/2) (kappa^alpha * W) + sqrt(1 - exp(-A|x|^2)) G,
/// W cellwise white noise of variance dt/h^d per component, G a spatially constant
/// normal vector of variance ||a||^2 dt per component. Deterministic in (seed, step).
///
/// Owns convolution scratch space: one instance per thread.
class NoiseModel {
 public:
  NoiseModel(const Grid& grid, const NoiseParams& params, bool allow_fft = true);

  const Grid& grid() const { return grid_; }
  const NoiseParams& params() const { return params_; }
  /// Discrete ||kappa^alpha||^2, the pointwise quadratic variation per unit time.
  double a_norm_sq() const { return a_norm_sq_; }
  /// ||a||^2 actually used for the constant-noise term (differs only under the debug override).
  double a_norm_sq_effective() const { return a_effective_; }
  /// ||a||_{l^infty} = sqrt(a_norm_sq / K_a).
  double a_linf() const;
  const std::vector<double>& kernel() const { return kernel_; }
  /// exp(-A|x_f|^2/2) at the faces of component k.
  const std::vector<double>& envelope(int k) const { return env_[static_cast<std::size_t>(k)]; }
  /// sqrt(1 - exp(-A|x_f|^2)) at the faces of component k.
  const std::vector<double>& envelope_complement(int k) const { return env_c_[static_cast<std::size_t>(k)]; }

  /// Increment over one step of length dt, with the step index as RNG counter.
  void sample(double dt, std::uint64_t step, VectorField& dW);
  VectorField sample(double dt, std::uint64_t step);

  /// Cell-kernel convolution of a face-staggered component (used for mollified controls).
  void mollify(const std::vector<double>& in, std::vector<double>& out);

 private:
  Grid grid_;
  NoiseParams params_;
  std::vector<double> kernel_;
  double a_norm_sq_ = 0.0;
  double a_effective_ = 0.0;
  std::array<std::vector<double>, 2> env_;
  std::array<std::vector<double>, 2> env_c_;
  std::vector<CyclicConvolver> face_conv_;
  CyclicConvolver cell_conv_;
  std::vector<double> white_;
  std::vector<double> smooth_;
};

struct QvReport {
  Field qv;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  /// (max - min) / mean
  double spread = 0.0;
  double a_norm_sq = 0.0;
  std::size_t n_samples = 0;
};

struct DivQvReport {
  Field field;
  double l1 = 0.0;
  double linf = 0.0;
  std::size_t n_samples = 0;
};

/// Empirical pointwise quadratic variation: per cell, mean over samples of |dW|^2/d
/// divided by dt (faces of the cell's own index). Samples use step indices
/// first_step, first_step + 1, ...
QvReport quadratic_variation(const Grid& grid, const NoiseParams& params, std::size_t n_samples,
                             double dt = 1e-3, std::uint64_t first_step = 0);

/// Empirical quadratic variation of the discrete divergence of the noise, with its L^1
/// and L^infty norms.
DivQvReport div_quadratic_variation(const Grid& grid, const NoiseParams& params, std::size_t n_samples,
                                    double dt = 1e-3, std::uint64_t first_step = 0);

struct ScalingEntry {
  double eps = 0.0;
  double alpha = 0.0;
  double A = 0.0;
  double K_a = 1.0;
};

enum class ScalingStatus { pass, fail, insufficient };
std::string to_string(ScalingStatus s);

struct ScalingRow {
  ScalingEntry entry;
  double a_linf_sq = 0.0;
  /// d >= 2: ||a||_inf^2 A^(1-(d+2)/2); d = 1: ||a||_inf.
  double first = 0.0;
  /// eps alpha^(-d-2) A^(-d/2).
  double second = 0.0;
};

struct ScalingReport {
  int d = 1;
  std::vector<ScalingRow> rows;
  ScalingStatus first_status = ScalingStatus::insufficient;
  ScalingStatus second_status = ScalingStatus::insufficient;
  bool pass() const { return first_status == ScalingStatus::pass && second_status == ScalingStatus::pass; }
};

/// Evaluates both noise-scaling expressions along a sequence ordered by decreasing eps,
/// using the continuum kernel norm C alpha^(-d). Each passes when strictly decreasing.
ScalingReport scaling_regime_check(int d, const std::vector<ScalingEntry>& seq);

}  // namespace fluctuo
