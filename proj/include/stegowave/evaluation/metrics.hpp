#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "stegowave/audio/waveform.hpp"
#include "stegowave/core/error.hpp"

namespace stegowave {

/// Mean of squared element differences.
inline double mse(std::span<const float> x, std::span<const float> y) {
  if (x.size() != y.size()) {
    throw ShapeError("mse: size mismatch " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  }
  if (x.empty()) throw ShapeError("mse: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(x.size());
}

/// Signal-to-noise ratio in dB. `exact` marks a zero error (infinite SNR).
struct SnrValue {
  double db = 0.0;
  bool exact = false;

  std::string to_string() const {
    if (exact) return "exact";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", db);
    return buf;
  }
};

inline SnrValue snr_db(std::span<const float> reference, std::span<const float> test) {
  if (reference.size() != test.size()) {
    throw ShapeError("snr_db: length mismatch " + std::to_string(reference.size()) + " vs " +
                     std::to_string(test.size()));
  }
  double signal = 0.0, error = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double r = reference[i];
    const double e = r - static_cast<double>(test[i]);
    signal += r * r;
    error += e * e;
  }
  if (signal == 0.0) throw NumericError("snr_db: reference signal is all zeros");
  if (error == 0.0) return {std::numeric_limits<double>::infinity(), true};
  return {10.0 * std::log10(signal / error), false};
}

inline SnrValue snr_db(const Waveform& reference, const Waveform& test) { return snr_db(reference.samples, test.samples); }

}  // namespace stegowave
