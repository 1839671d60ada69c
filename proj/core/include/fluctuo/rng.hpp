#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace fluctuo {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Stateless: the
/// output is a pure function of (key, counter).
class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  Block operator()(Block ctr) const {
    std::array<std::uint32_t, 2> k = key_;
    for (int r = 0; r < 10; ++r) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k[1], static_cast<std::uint32_t>(p0)};
      k[0] += kW0;
      k[1] += kW1;
    }
    return ctr;
  }

  /// Two independent standard normals for the counter (Box-Muller on 53-bit uniforms).
  std::array<double, 2> normals(const Block& ctr) const {
    const Block b = (*this)(ctr);
    const double u1 = to_unit(b[0], b[1]);
    const double u2 = to_unit(b[2], b[3]);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(t), r * std::sin(t)};
  }

  /// Counter layout shared by all noise draws.
  static Block counter(std::uint64_t step, std::uint32_t cell, std::uint32_t stream, std::uint32_t component) {
    return {static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32), cell,
            (stream << 16) | component};
  }

 private:
  /// Uniform in the open interval (0, 1).
  static double to_unit(std::uint32_t a, std::uint32_t b) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(a >> 5) << 26) | (b >> 6);
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;
  std::array<std::uint32_t, 2> key_;
};

}  // namespace fluctuo
