#pragma once

#include <cmath>

#include "stegowave/audio/waveform.hpp"
#include "stegowave/core/error.hpp"
#include "stegowave/core/rng.hpp"

namespace stegowave {

/// Adds white Gaussian noise at `snr_db` relative to the signal power.
/// An infinite SNR returns the input unchanged.
inline Waveform add_channel_noise(const Waveform& w, double snr_db, Rng& rng) {
  if (w.samples.empty()) throw Error("add_channel_noise: empty signal");
  double power = 0.0;
  for (float v : w.samples) power += static_cast<double>(v) * v;
  power /= static_cast<double>(w.samples.size());
  if (power == 0.0) throw Error("add_channel_noise: all-zero signal, SNR undefined");
  if (std::isinf(snr_db) && snr_db > 0) return w;
  const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  Waveform out = w;
  for (float& v : out.samples) v = static_cast<float>(v + sigma * rng.normal());
  return out;
}

}  // namespace stegowave
