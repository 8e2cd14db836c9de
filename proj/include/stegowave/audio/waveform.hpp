#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace stegowave {

/// Canonical segment length in samples at the canonical rate.
inline constexpr std::size_t kSegmentLength = 32640;
inline constexpr int kCanonicalRate = 22050;

/// Mono audio signal. After loading, samples are finite and lie in [-1, 1].
struct Waveform {
  std::vector<float> samples;
  int sample_rate = kCanonicalRate;

  std::size_t length() const { return samples.size(); }

  bool all_finite() const {
    return std::all_of(samples.begin(), samples.end(),
                       [](float v) { return std::isfinite(v); });
  }

  float peak() const {
    float m = 0.0f;
    for (float v : samples) m = std::max(m, std::abs(v));
    return m;
  }
};

/// Splits a waveform into non-overlapping segments of exactly `target`
/// samples. Waveforms shorter than `target` yield nothing and the tail
/// remainder is dropped, never padded.
inline std::vector<Waveform> fix_length(const Waveform& w,
                                        std::size_t target = kSegmentLength) {
  std::vector<Waveform> out;
  if (target == 0) return out;
  const std::size_t count = w.length() / target;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Waveform seg;
    seg.sample_rate = w.sample_rate;
    seg.samples.assign(w.samples.begin() + static_cast<std::ptrdiff_t>(i * target),
                       w.samples.begin() + static_cast<std::ptrdiff_t>((i + 1) * target));
    out.push_back(std::move(seg));
  }
  return out;
}

}  // namespace stegowave
