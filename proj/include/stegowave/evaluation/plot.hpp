#pragma once

// Time-frequency power heat maps written as binary PPM images. Frequency
// increases upwards; each spectrogram cell becomes a `scale` x `scale` block.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "stegowave/audio/spectral.hpp"
#include "stegowave/core/error.hpp"

namespace stegowave {

struct PlotConfig {
  double floor_db = -80.0;  // values below (peak + floor_db) share the darkest colour
  std::size_t scale = 2;
};

/// Power in dB per (bin, frame), 10 log10(re^2 + im^2).
inline std::vector<double> power_db(const Spectrogram& s) {
  std::vector<double> out(s.plane());
  for (std::size_t k = 0; k < s.bins; ++k) {
    for (std::size_t t = 0; t < s.frames; ++t) {
      const double re = s.at(0, k, t), im = s.at(1, k, t);
      out[k * s.frames + t] = 10.0 * std::log10(re * re + im * im + 1e-20);
    }
  }
  return out;
}

namespace detail {

// Piecewise-linear dark-blue -> magenta -> yellow colour ramp.
inline std::array<unsigned char, 3> heat_colour(double x) {
  static constexpr double stops[][3] = {{0, 0, 4}, {80, 18, 123}, {183, 55, 121}, {251, 136, 97}, {252, 253, 191}};
  x = std::clamp(x, 0.0, 1.0) * 4.0;
  const auto i = std::min<std::size_t>(3, static_cast<std::size_t>(x));
  const double f = x - static_cast<double>(i);
  std::array<unsigned char, 3> c{};
  for (int j = 0; j < 3; ++j) c[j] = static_cast<unsigned char>(std::lround(stops[i][j] + f * (stops[i + 1][j] - stops[i][j])));
  return c;
}

}  // namespace detail

inline void write_spectrogram_ppm(const std::filesystem::path& path, const Spectrogram& s, const PlotConfig& cfg = {}) {
  if (s.bins == 0 || s.frames == 0) throw ShapeError("plot: empty spectrogram");
  const auto db = power_db(s);
  const double peak = *std::max_element(db.begin(), db.end());
  const double lo = peak + cfg.floor_db;
  const std::size_t k = std::max<std::size_t>(1, cfg.scale);
  const std::size_t width = s.frames * k, height = s.bins * k;
  std::vector<unsigned char> pixels(width * height * 3);
  for (std::size_t y = 0; y < height; ++y) {
    const std::size_t bin = s.bins - 1 - y / k;
    for (std::size_t x = 0; x < width; ++x) {
      const double v = (db[bin * s.frames + x / k] - lo) / (peak - lo);
      const auto c = detail::heat_colour(v);
      std::copy(c.begin(), c.end(), pixels.begin() + static_cast<std::ptrdiff_t>((y * width + x) * 3));
    }
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write image: " + path.string());
  os << "P6\n" << width << " " << height << "\n255\n";
  os.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  if (!os) throw IoError("failed writing image: " + path.string());
}

}  // namespace stegowave
