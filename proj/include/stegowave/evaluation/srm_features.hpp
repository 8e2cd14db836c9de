#pragma once

// Rich-model style features: residuals from the K3/K5 high-pass kernels,
// quantized and truncated, summarized by 4th-order co-occurrence histograms
// along frames (horizontal) and bins (vertical).

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "stegowave/audio/spectral.hpp"
#include "stegowave/core/error.hpp"
#include "stegowave/models/srm.hpp"

namespace stegowave {

struct SrmFeatureConfig {
  double q = 1.0;  // quantization step
  int T = 2;       // truncation threshold
  K3Variant k3 = K3Variant::corrected;

  static constexpr std::size_t kOrder = 4;
  static constexpr std::size_t kChannels = 2;
  static constexpr std::size_t kKernels = 2;
  static constexpr std::size_t kDirections = 2;

  std::size_t histogram_bins() const {
    std::size_t n = 1;
    for (std::size_t i = 0; i < kOrder; ++i) n *= static_cast<std::size_t>(2 * T + 1);
    return n;
  }
  std::size_t dimension() const { return kChannels * kKernels * kDirections * histogram_bins(); }

  void validate() const {
    if (!(q > 0) || !std::isfinite(q)) throw ConfigError("srm_features: quantization step q must be positive");
    if (T < 0 || T > 6) throw ConfigError("srm_features: truncation T must be in [0, 6]");
  }
};

namespace detail {

// Appends the normalized horizontal then vertical co-occurrence histograms of
// a truncated residual plane holding values in [0, 2T].
inline void cooccurrence(const std::vector<int>& codes, std::size_t rows, std::size_t cols, int T,
                         std::vector<float>& out) {
  const std::size_t base = static_cast<std::size_t>(2 * T + 1);
  const std::size_t bins = base * base * base * base;
  for (int dir = 0; dir < 2; ++dir) {
    std::vector<double> hist(bins, 0.0);
    const std::size_t step = dir == 0 ? 1 : cols;
    const std::size_t r_end = dir == 0 ? rows : (rows >= 4 ? rows - 3 : 0);
    const std::size_t c_end = dir == 0 ? (cols >= 4 ? cols - 3 : 0) : cols;
    double count = 0.0;
    for (std::size_t r = 0; r < r_end; ++r) {
      for (std::size_t c = 0; c < c_end; ++c) {
        const std::size_t p = r * cols + c;
        std::size_t idx = 0;
        for (std::size_t k = 0; k < 4; ++k) idx = idx * base + static_cast<std::size_t>(codes[p + k * step]);
        hist[idx] += 1.0;
        count += 1.0;
      }
    }
    for (double h : hist) out.push_back(count > 0 ? static_cast<float>(h / count) : 0.0f);
  }
}

}  // namespace detail

/// Feature vector for a (2, bins, frames) spectrogram stored contiguously.
inline std::vector<float> srm_features(std::span<const float> spec, std::size_t bins, std::size_t frames,
                                       const SrmFeatureConfig& cfg = {}) {
  cfg.validate();
  if (spec.size() != 2 * bins * frames) throw ShapeError("srm_features: spectrogram size mismatch");
  if (bins < 8 || frames < 8) throw ShapeError("srm_features: spectrogram too small");
  const SrmKernels kernels = build_srm_kernels(cfg.k3);
  std::vector<float> out;
  out.reserve(cfg.dimension());
  auto encode = [&](const std::vector<double>& residual) {
    std::vector<int> codes(residual.size());
    for (std::size_t i = 0; i < residual.size(); ++i) {
      const double v = std::nearbyint(residual[i] / cfg.q);
      codes[i] = static_cast<int>(std::clamp(v, -static_cast<double>(cfg.T), static_cast<double>(cfg.T))) + cfg.T;
    }
    return codes;
  };
  const std::size_t plane = bins * frames;
  for (std::size_t ch = 0; ch < 2; ++ch) {
    const auto p = spec.subspan(ch * plane, plane);
    std::size_t r = 0, c = 0;
    const auto r3 = apply_kernel(p, bins, frames, kernels.k3_taps, kernels.k3_divisor, r, c);
    detail::cooccurrence(encode(r3), r, c, cfg.T, out);
    const auto r5 = apply_kernel(p, bins, frames, kernels.k5_taps, kernels.k5_divisor, r, c);
    detail::cooccurrence(encode(r5), r, c, cfg.T, out);
  }
  return out;
}

inline std::vector<float> srm_features(const Spectrogram& s, const SrmFeatureConfig& cfg = {}) {
  return srm_features(s.data, s.bins, s.frames, cfg);
}

}  // namespace stegowave
