#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <vector>

#include "stegowave/core/error.hpp"

namespace stegowave {

namespace detail {

inline double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

// Zeroth-order modified Bessel function of the first kind (series form).
inline double bessel_i0(double x) {
  double sum = 1.0, term = 1.0;
  const double q = x * x / 4.0;
  for (int k = 1; k < 64; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

}  // namespace detail

/// Band-limited resampling with a Kaiser-windowed sinc kernel.
/// Output length is floor(n * to / from). Identity when the rates match.
inline std::vector<float> resample(const std::vector<float>& in, int from_rate,
                                   int to_rate, int half_taps = 32,
                                   double beta = 8.6) {
  if (from_rate <= 0 || to_rate <= 0) throw Error("resample: rates must be positive");
  if (from_rate == to_rate) return in;

  const std::size_t n_out = static_cast<std::size_t>(
      (static_cast<unsigned long long>(in.size()) * static_cast<unsigned>(to_rate)) /
      static_cast<unsigned>(from_rate));
  std::vector<float> out(n_out);

  const double step = static_cast<double>(from_rate) / to_rate;
  // Lowpass at the lower Nyquist frequency, expressed in input samples.
  const double cutoff = std::min(1.0, static_cast<double>(to_rate) / from_rate) * 0.97;
  const double support = half_taps / cutoff;

  // Kernel tabulated over |d| in [0, support]; linear interpolation between taps.
  constexpr int kPhases = 512;
  const auto table_len = static_cast<std::size_t>(std::ceil(support * kPhases)) + 2;
  std::vector<double> table(table_len);
  const double i0_beta = detail::bessel_i0(beta);
  for (std::size_t k = 0; k < table_len; ++k) {
    const double d = static_cast<double>(k) / kPhases;
    const double r = std::min(1.0, d / support);
    table[k] = cutoff * detail::sinc(cutoff * d) *
               detail::bessel_i0(beta * std::sqrt(1.0 - r * r)) / i0_beta;
  }
  auto kernel = [&](double d) {
    const double pos = std::abs(d) * kPhases;
    const auto k = static_cast<std::size_t>(pos);
    if (k + 1 >= table_len) return 0.0;
    const double frac = pos - static_cast<double>(k);
    return table[k] + frac * (table[k + 1] - table[k]);
  };

  const auto n_in = static_cast<std::ptrdiff_t>(in.size());
  for (std::size_t j = 0; j < n_out; ++j) {
    const double t = static_cast<double>(j) * step;
    const auto lo = std::max<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(std::ceil(t - support)), 0);
    const auto hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(std::floor(t + support)), n_in - 1);
    double acc = 0.0;
    for (std::ptrdiff_t i = lo; i <= hi; ++i) {
      acc += in[static_cast<std::size_t>(i)] * kernel(static_cast<double>(i) - t);
    }
    out[j] = static_cast<float>(acc);
  }
  return out;
}

}  // namespace stegowave
