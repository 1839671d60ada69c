#pragma once

#include <memory>
#include <vector>

#include "fluctuo/grid.hpp"

namespace fluctuo {

/// Cyclic convolution out[i] = sum_o kernel[o] * in[i - o] on a periodic grid, with
/// offsets o stored at their wrapped cell index. Uses an FFT when N is a power of two
/// and a direct sum otherwise.
///
/// Not thread-safe: owns scratch buffers. Give each thread its own instance.
class CyclicConvolver {
 public:
  CyclicConvolver(const Grid& grid, std::vector<double> kernel, bool allow_fft = true);
  ~CyclicConvolver();
  CyclicConvolver(CyclicConvolver&&) noexcept;
  CyclicConvolver& operator=(CyclicConvolver&&) noexcept;
  CyclicConvolver(const CyclicConvolver&) = delete;
  CyclicConvolver& operator=(const CyclicConvolver&) = delete;

  void apply(const std::vector<double>& in, std::vector<double>& out);
  bool uses_fft() const { return fft_ != nullptr; }
  const Grid& grid() const { return grid_; }

 private:
  struct Fft;
  void apply_direct(const std::vector<double>& in, std::vector<double>& out) const;

  Grid grid_;
  std::vector<double> kernel_;
  // Nonzero kernel offsets for the direct path.
  std::vector<std::size_t> support_;
  std::unique_ptr<Fft> fft_;
};

}  // namespace fluctuo
