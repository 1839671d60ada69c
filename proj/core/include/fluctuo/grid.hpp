#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace fluctuo {

/// Periodic box [-L, L)^d with N cells per axis. Cells are stored row-major,
/// axis 0 slowest.
struct Grid {
  int d = 1;
  std::size_t N = 64;
  double L = 1.0;

  Grid() = default;
  Grid(int d_, std::size_t N_, double L_);

  double h() const { return 2.0 * L / static_cast<double>(N); }
  /// h^d, the cell volume.
  double cell_volume() const { return d == 1 ? h() : h() * h(); }
  std::size_t size() const { return d == 1 ? N : N * N; }

  /// Multi-index of a flat cell index.
  std::array<std::size_t, 2> unflatten(std::size_t idx) const;
  std::size_t flatten(std::size_t i0, std::size_t i1 = 0) const { return d == 1 ? i0 : i0 * N + i1; }
  /// Periodic neighbour of `idx` along `axis`, shifted by +1 or -1.
  std::size_t neighbor(std::size_t idx, int axis, int shift) const;

  /// Coordinate of the cell center along `axis`.
  double center(std::size_t idx, int axis) const;
  /// |x|^2 at the cell center.
  double center_r2(std::size_t idx) const;
  /// |x|^2 at the face between `idx` and its +1 neighbour along `axis`.
  double face_r2(std::size_t idx, int axis) const;

  bool operator==(const Grid& o) const { return d == o.d && N == o.N && L == o.L; }
  bool operator!=(const Grid& o) const { return !(*this == o); }
};

/// Scalar cell-centered field with far-field reference value gamma.
struct Field {
  Grid grid;
  double gamma = 1.0;
  std::vector<double> values;

  Field() = default;
  Field(const Grid& g, double gamma_, double fill);
  Field(const Grid& g, double gamma_, std::vector<double> v);

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  double min() const;
  double max() const;
};

/// Face-staggered vector field: component k lives on the face between cell i and
/// its +1 neighbour along axis k, stored at index i.
struct VectorField {
  Grid grid;
  std::array<std::vector<double>, 2> comp;

  VectorField() = default;
  explicit VectorField(const Grid& g, double fill = 0.0);

  std::vector<double>& operator[](int k) { return comp[static_cast<std::size_t>(k)]; }
  const std::vector<double>& operator[](int k) const { return comp[static_cast<std::size_t>(k)]; }
};

void require_same_grid(const Grid& a, const Grid& b);

VectorField gradient(const Field& f);
/// Gradient of an arbitrary per-cell array on grid g.
VectorField gradient(const Grid& g, const std::vector<double>& v);
Field divergence(const VectorField& v, double gamma = 0.0);
Field laplacian(const Field& f);

double integrate(const Field& f);
double l1_distance(const Field& f, const Field& g);
double mass_excess(const Field& f);
/// Sum over faces and components of u*v*h^d.
double inner(const VectorField& u, const VectorField& v);

/// CSV rows: index, x0[, x1], value.
void write_csv(const Field& f, std::ostream& out);
void write_csv(const Field& f, const std::filesystem::path& path);
/// Header d, N, L, gamma (little-endian 64-bit each), then row-major doubles.
void write_binary(const Field& f, const std::filesystem::path& path);
Field read_binary(const std::filesystem::path& path);
/// CSV rows: index, x0[, x1], g0[, g1] at the cell's own faces.
void write_csv(const VectorField& v, std::ostream& out);

}  // namespace fluctuo
