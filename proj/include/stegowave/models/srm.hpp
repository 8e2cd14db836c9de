#pragma once

// High-pass residual kernels from the spatial rich model.

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "stegowave/core/error.hpp"

namespace stegowave {

enum class K3Variant {
  corrected,  ///< bottom-left entry -1: zero-sum, annihilates constants
  printed,    ///< bottom-left entry +1 as sometimes published; sums to 1/2
};

/// Kernels stored as integer taps plus a common divisor so they can be
/// applied exactly.
struct SrmKernels {
  std::array<int, 9> k3_taps{};
  double k3_divisor = 4.0;
  std::array<int, 25> k5_taps{};
  double k5_divisor = 12.0;

  double k3(std::size_t r, std::size_t c) const { return k3_taps[r * 3 + c] / k3_divisor; }
  double k5(std::size_t r, std::size_t c) const { return k5_taps[r * 5 + c] / k5_divisor; }

  /// K3 embedded in the centre of a 5x5 grid.
  std::array<double, 25> k3_padded5() const {
    std::array<double, 25> out{};
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t c = 0; c < 3; ++c) out[(r + 1) * 5 + (c + 1)] = k3(r, c);
    }
    return out;
  }
  std::array<double, 25> k5_values() const {
    std::array<double, 25> out{};
    for (std::size_t i = 0; i < 25; ++i) out[i] = k5_taps[i] / k5_divisor;
    return out;
  }
};

inline SrmKernels build_srm_kernels(K3Variant variant = K3Variant::corrected) {
  SrmKernels k;
  k.k3_taps = {-1, 2, -1,
               2, -4, 2,
               variant == K3Variant::corrected ? -1 : 1, 2, -1};
  k.k5_taps = {-1, 2, -2, 2, -1,
               2, -6, 8, -6, 2,
               -2, 8, -12, 8, -2,
               2, -6, 8, -6, 2,
               -1, 2, -2, 2, -1};
  return k;
}

/// Valid-region correlation of a (rows x cols) plane with an integer kernel,
/// divided by `divisor`. Products and sums of float inputs with small integer
/// taps are exact in double, so constant inputs give exactly zero for
/// zero-sum kernels.
template <std::size_t N>
std::vector<double> apply_kernel(std::span<const float> plane, std::size_t rows, std::size_t cols,
                                 const std::array<int, N>& taps, double divisor,
                                 std::size_t& out_rows, std::size_t& out_cols) {
  constexpr std::size_t k = N == 9 ? 3 : 5;
  static_assert(k * k == N, "kernel must be 3x3 or 5x5");
  if (plane.size() != rows * cols) throw ShapeError("apply_kernel: plane size mismatch");
  if (rows < k || cols < k) throw ShapeError("apply_kernel: plane smaller than kernel");
  out_rows = rows - k + 1;
  out_cols = cols - k + 1;
  std::vector<double> out(out_rows * out_cols);
  for (std::size_t r = 0; r < out_rows; ++r) {
    for (std::size_t c = 0; c < out_cols; ++c) {
      double acc = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        const float* row = plane.data() + (r + i) * cols + c;
        for (std::size_t j = 0; j < k; ++j) acc += taps[i * k + j] * static_cast<double>(row[j]);
      }
      out[r * out_cols + c] = acc / divisor;
    }
  }
  return out;
}

}  // namespace stegowave
