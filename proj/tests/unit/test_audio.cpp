#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "support/helpers.hpp"

namespace sw = stegowave;
using sw::testing::noise_waveform;
using sw::testing::sine_waveform;
using sw::testing::temp_dir;

namespace {

// Minimal independent WAV writer for interleaved multi-channel 16-bit PCM.
void write_raw_pcm16(const std::filesystem::path& p, int rate, int channels, const std::vector<std::int16_t>& data) {
  std::ofstream os(p, std::ios::binary);
  auto u32 = [&](std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); };
  auto u16 = [&](std::uint16_t v) { os.write(reinterpret_cast<const char*>(&v), 2); };
  const auto bytes = static_cast<std::uint32_t>(data.size() * 2);
  os.write("RIFF", 4);
  u32(36 + bytes);
  os.write("WAVEfmt ", 8);
  u32(16);
  u16(1);
  u16(static_cast<std::uint16_t>(channels));
  u32(static_cast<std::uint32_t>(rate));
  u32(static_cast<std::uint32_t>(rate * channels * 2));
  u16(static_cast<std::uint16_t>(channels * 2));
  u16(16);
  os.write("data", 4);
  u32(bytes);
  os.write(reinterpret_cast<const char*>(data.data()), bytes);
}

double interior_snr(const std::vector<float>& ref, const std::vector<float>& test, std::size_t margin) {
  double s = 0, e = 0;
  for (std::size_t i = margin; i + margin < ref.size(); ++i) {
    s += double(ref[i]) * ref[i];
    e += (double(ref[i]) - test[i]) * (double(ref[i]) - test[i]);
  }
  return 10 * std::log10(s / e);
}

}  // namespace

TEST(Wav, Pcm16RoundTripWithinQuantization) {
  const auto dir = temp_dir();
  const auto w = sine_waveform(1000, 440, 16000, 0.7f);
  sw::write_wav(dir / "a.wav", w, sw::SampleFormat::pcm16);
  const auto r = sw::read_wav(dir / "a.wav");
  ASSERT_EQ(r.sample_rate, 16000);
  ASSERT_EQ(r.length(), 1000u);
  for (std::size_t i = 0; i < w.length(); ++i) EXPECT_NEAR(r.samples[i], w.samples[i], 0.5 / 32768 + 1e-9);
}

TEST(Wav, Float32RoundTripIsExact) {
  const auto dir = temp_dir();
  const auto w = noise_waveform(777, 3);
  sw::write_wav(dir / "f.wav", w, sw::SampleFormat::float32);
  const auto r = sw::read_wav(dir / "f.wav");
  EXPECT_EQ(r.samples, w.samples);
}

TEST(Wav, Pcm16ClipsOutOfRange) {
  const auto dir = temp_dir();
  sw::Waveform w{{2.0f, -3.0f, 0.5f}, 8000};
  sw::write_wav(dir / "c.wav", w);
  const auto r = sw::read_wav(dir / "c.wav");
  EXPECT_NEAR(r.samples[0], 1.0f, 1e-4);
  EXPECT_NEAR(r.samples[1], -1.0f, 1e-4);
}

TEST(Wav, StereoIsDownmixedByMean) {
  const auto dir = temp_dir();
  write_raw_pcm16(dir / "s.wav", 8000, 2, {16384, 0, -16384, -16384, 8192, 8192});
  const auto r = sw::read_wav(dir / "s.wav");
  ASSERT_EQ(r.length(), 3u);
  EXPECT_NEAR(r.samples[0], 0.25f, 1e-4);
  EXPECT_NEAR(r.samples[1], -0.5f, 1e-4);
  EXPECT_NEAR(r.samples[2], 0.25f, 1e-4);
}

TEST(Wav, LoadErrors) {
  const auto dir = temp_dir();
  EXPECT_THROW(sw::load_wav(dir / "missing.wav"), sw::IoError);
  write_raw_pcm16(dir / "empty.wav", 8000, 1, {});
  EXPECT_THROW(sw::load_wav(dir / "empty.wav"), sw::FormatError);
  std::ofstream(dir / "junk.wav") << "not a wav file at all";
  EXPECT_THROW(sw::load_wav(dir / "junk.wav"), sw::Error);
}

TEST(Wav, LoadResamplesAndPeakNormalizes) {
  const auto dir = temp_dir();
  sw::write_wav(dir / "a.wav", sine_waveform(16000, 300, 16000, 0.25f));
  const auto w = sw::load_wav(dir / "a.wav", 22050);
  EXPECT_EQ(w.sample_rate, 22050);
  EXPECT_EQ(w.length(), 22050u);
  EXPECT_NEAR(w.peak(), 1.0f, 1e-6);
  const auto raw = sw::load_wav(dir / "a.wav", 16000, sw::Normalize::none);
  EXPECT_NEAR(raw.peak(), 0.25f, 1e-3);
}

TEST(Resample, IdentityWhenRatesMatch) {
  const auto w = noise_waveform(500, 1);
  EXPECT_EQ(sw::resample(w.samples, 22050, 22050), w.samples);
}

TEST(Resample, PreservesInBandSine) {
  const auto in = sine_waveform(16000, 440, 16000);
  const auto out = sw::resample(in.samples, 16000, 22050);
  ASSERT_EQ(out.size(), 22050u);
  const auto ref = sine_waveform(22050, 440, 22050);
  EXPECT_GT(interior_snr(ref.samples, out, 200), 40.0);
}

TEST(Resample, DownsamplingSuppressesAliases) {
  // 10 kHz at 44.1 kHz lies above the 22.05 kHz/2 band edge after resampling.
  const auto in = sine_waveform(44100, 10000, 44100);
  const auto out = sw::resample(in.samples, 44100, 16000);
  double p = 0;
  for (std::size_t i = 100; i + 100 < out.size(); ++i) p += double(out[i]) * out[i];
  EXPECT_LT(p / out.size(), 1e-4 * 0.125);
}

TEST(FixLength, SegmentsAndDropsRemainder) {
  const auto w = noise_waveform(2 * sw::kSegmentLength + 100, 4);
  const auto segs = sw::fix_length(w);
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_EQ(segs[1].samples.front(), w.samples[sw::kSegmentLength]);
  EXPECT_TRUE(sw::fix_length(noise_waveform(sw::kSegmentLength - 1, 4)).empty());
}

TEST(Spectral, CanonicalShape) {
  sw::SpectralConfig c;
  EXPECT_EQ(c.bins(), 257u);
  EXPECT_EQ(c.frames(), 147u);
  const auto s = sw::stft(noise_waveform(sw::kSegmentLength, 2));
  EXPECT_EQ(s.bins, 257u);
  EXPECT_EQ(s.frames, 147u);
  EXPECT_EQ(s.data.size(), 2u * 257 * 147);
  EXPECT_TRUE(s.all_finite());
}

TEST(Spectral, RejectsWrongLengthAndRate) {
  EXPECT_THROW(sw::stft(noise_waveform(1000, 1)), sw::ShapeError);
  EXPECT_THROW(sw::stft(noise_waveform(sw::kSegmentLength, 1, 0.3f, 16000)), sw::Error);
  sw::Spectrogram bad(10, 10);
  EXPECT_THROW(sw::istft(bad), sw::ShapeError);
}

TEST(Spectral, RoundTripInteriorSnr) {
  const auto w = noise_waveform(sw::kSegmentLength, 7);
  const auto r = sw::istft(sw::stft(w));
  EXPECT_GT(interior_snr(w.samples, r.samples, 512), 60.0);
}

TEST(Spectral, MatchesDirectDft) {
  // One frame against a textbook DFT with the same periodic Hann window.
  const auto cfg = sw::testing::small_spectral();
  const auto w = noise_waveform(cfg.segment_length, 8, 0.3f);
  const sw::StftEngine engine(cfg);
  const auto s = engine.stft(w);
  const std::size_t t = 3, n = static_cast<std::size_t>(cfg.n_fft);
  for (std::size_t k = 0; k < cfg.bins(); k += 5) {
    double re = 0, im = 0;
    for (std::size_t m = 0; m < n; ++m) {
      const double win = 0.5 - 0.5 * std::cos(2 * std::numbers::pi * m / n);
      const double x = win * w.samples[t * cfg.hop + m];
      re += x * std::cos(2 * std::numbers::pi * k * m / n);
      im -= x * std::sin(2 * std::numbers::pi * k * m / n);
    }
    EXPECT_NEAR(s.at(0, k, t), re / std::sqrt(double(n)), 1e-4);
    EXPECT_NEAR(s.at(1, k, t), im / std::sqrt(double(n)), 1e-4);
  }
}

TEST(Spectral, AdjointIdentities) {
  const auto cfg = sw::testing::small_spectral();
  const sw::StftEngine e(cfg);
  sw::Rng rng(3);
  std::vector<float> x(e.length()), y(2 * cfg.plane_size()), ax(y.size()), aty(x.size());
  for (auto& v : x) v = float(rng.normal());
  for (auto& v : y) v = float(rng.normal());
  e.analyze(x, ax);
  e.analyze_adjoint(y, aty);
  double lhs = 0, rhs = 0;
  for (std::size_t i = 0; i < y.size(); ++i) lhs += double(ax[i]) * y[i];
  for (std::size_t i = 0; i < x.size(); ++i) rhs += double(x[i]) * aty[i];
  EXPECT_NEAR(lhs, rhs, 1e-3 * std::abs(lhs) + 1e-3);

  std::vector<float> sy(x.size()), stx(y.size());
  e.synthesize(y, sy);
  e.synthesize_adjoint(x, stx);
  lhs = rhs = 0;
  for (std::size_t i = 0; i < x.size(); ++i) lhs += double(sy[i]) * x[i];
  for (std::size_t i = 0; i < y.size(); ++i) rhs += double(y[i]) * stx[i];
  EXPECT_NEAR(lhs, rhs, 1e-3 * std::abs(lhs) + 1e-3);
}

TEST(Spectral, ComplexSplitMergeRoundTrip) {
  sw::ComplexMatrix c(3, 4);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) c(i, j) = {float(i + j), float(i - j)};
  const auto s = sw::complex_split(c);
  EXPECT_EQ(s.at(0, 2, 3), 5.0f);
  EXPECT_EQ(s.at(1, 2, 3), -1.0f);
  EXPECT_TRUE(sw::complex_merge(s).isApprox(c));
}

TEST(Spectral, TensorFileRoundTripAndConfigHash) {
  const auto dir = temp_dir();
  const auto s = sw::stft(noise_waveform(sw::kSegmentLength, 5));
  sw::save_spectrogram(dir / "s.swsp", s);
  const auto r = sw::load_spectrogram(dir / "s.swsp");
  EXPECT_EQ(r.data, s.data);
  sw::SpectralConfig other;
  other.hop = 256;
  EXPECT_NE(other.hash(), sw::SpectralConfig{}.hash());
  std::ofstream(dir / "bad.swsp") << "XXXX";
  EXPECT_THROW(sw::load_spectrogram(dir / "bad.swsp"), sw::FormatError);
}

TEST(Spectral, ConfigValidation) {
  sw::SpectralConfig c;
  c.n_fft = 500;
  EXPECT_THROW(c.validate(), sw::ConfigError);
  c = {};
  c.window = "hamming";
  EXPECT_THROW(c.validate(), sw::ConfigError);
}
