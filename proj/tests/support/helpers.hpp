#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <string>

#include "stegowave/stegowave.hpp"

namespace stegowave::testing {

/// Fresh directory under the build tree, unique to the running test.
inline std::filesystem::path temp_dir(const std::string& tag = "") {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  std::string name = info != nullptr ? std::string(info->test_suite_name()) + "." + info->name() : "global";
  if (!tag.empty()) name += "." + tag;
  const auto dir = std::filesystem::path(STEGOWAVE_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Small transform used where the canonical size would only cost time.
inline SpectralConfig small_spectral() {
  SpectralConfig c;
  c.n_fft = 64;
  c.hop = 32;
  c.segment_length = 1024;
  return c;
}

inline Waveform noise_waveform(std::size_t n, std::uint64_t seed, float scale = 0.3f, int rate = kCanonicalRate) {
  Rng rng(seed);
  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(n);
  for (auto& v : w.samples) v = scale * static_cast<float>(rng.normal());
  return w;
}

inline Waveform sine_waveform(std::size_t n, double freq, int rate, float amp = 0.5f) {
  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) w.samples[i] = amp * static_cast<float>(std::sin(2 * std::numbers::pi * freq * i / rate));
  return w;
}

/// Narrow networks for fast structural tests.
inline ModelConfig tiny_model(std::uint64_t seed = 3, InitSetting init = InitSetting::ran) {
  ModelConfig m;
  m.width_divisor = 16;
  m.hpf_filters = 6;
  m.fc1 = 16;
  m.fc2 = 8;
  m.init = init;
  m.seed = seed;
  return m;
}

}  // namespace stegowave::testing
