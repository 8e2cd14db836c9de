#pragma once

// Short-time Fourier analysis/synthesis on fixed-length segments and the
// 2-channel (real, imaginary) spectrogram representation fed to the networks.

#include <algorithm>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

#include "stegowave/audio/waveform.hpp"
#include "stegowave/core/binary_io.hpp"
#include "stegowave/core/error.hpp"
#include "stegowave/core/hash.hpp"

namespace stegowave {

struct SpectralConfig {
  int n_fft = 512;
  int hop = 220;  // 10 ms at 22050 Hz, rounded down
  std::string window = "hann";
  int sample_rate = kCanonicalRate;
  std::size_t segment_length = kSegmentLength;
  // Scale frames by 1/sqrt(n_fft) so spectrogram values are O(signal rms).
  bool normalized = true;

  std::size_t bins() const { return static_cast<std::size_t>(n_fft / 2 + 1); }
  std::size_t frames() const {
    return 1 + (segment_length - static_cast<std::size_t>(n_fft)) / static_cast<std::size_t>(hop);
  }
  std::size_t plane_size() const { return bins() * frames(); }

  void validate() const {
    if (n_fft < 4 || (n_fft & (n_fft - 1)) != 0) throw ConfigError("n_fft must be a power of two >= 4");
    if (hop < 1 || hop > n_fft) throw ConfigError("hop must lie in [1, n_fft]");
    if (window != "hann") throw ConfigError("unsupported window '" + window + "' (only hann)");
    if (sample_rate <= 0) throw ConfigError("sample_rate must be positive");
    if (segment_length < static_cast<std::size_t>(n_fft)) throw ConfigError("segment_length shorter than n_fft");
  }

  std::string canonical_text() const {
    std::ostringstream os;
    os << "n_fft=" << n_fft << ";hop=" << hop << ";window=" << window
       << ";sample_rate=" << sample_rate << ";segment_length=" << segment_length
       << ";normalized=" << (normalized ? 1 : 0);
    return os.str();
  }

  std::uint64_t hash() const { return fnv1a64(canonical_text()); }

  friend bool operator==(const SpectralConfig&, const SpectralConfig&) = default;
};

/// Real tensor of shape (2, bins, frames): channel 0 holds real parts,
/// channel 1 imaginary parts. Row-major, frames fastest.
struct Spectrogram {
  std::size_t bins = 0;
  std::size_t frames = 0;
  std::vector<float> data;
  SpectralConfig config;

  Spectrogram() = default;
  Spectrogram(std::size_t b, std::size_t f, SpectralConfig cfg = {})
      : bins(b), frames(f), data(2 * b * f, 0.0f), config(std::move(cfg)) {}

  std::size_t plane() const { return bins * frames; }
  float& at(std::size_t ch, std::size_t k, std::size_t t) { return data[ch * plane() + k * frames + t]; }
  float at(std::size_t ch, std::size_t k, std::size_t t) const { return data[ch * plane() + k * frames + t]; }
  std::span<float> real() { return {data.data(), plane()}; }
  std::span<float> imag() { return {data.data() + plane(), plane()}; }

  bool all_finite() const {
    return std::all_of(data.begin(), data.end(), [](float v) { return std::isfinite(v); });
  }
};

using ComplexMatrix = Eigen::Matrix<std::complex<float>, Eigen::Dynamic, Eigen::Dynamic>;

/// Channel 0 = Re, channel 1 = Im. Rows are frequency bins, columns frames.
inline Spectrogram complex_split(const ComplexMatrix& c, const SpectralConfig& cfg = {}) {
  Spectrogram s(static_cast<std::size_t>(c.rows()), static_cast<std::size_t>(c.cols()), cfg);
  for (Eigen::Index k = 0; k < c.rows(); ++k) {
    for (Eigen::Index t = 0; t < c.cols(); ++t) {
      s.at(0, k, t) = c(k, t).real();
      s.at(1, k, t) = c(k, t).imag();
    }
  }
  return s;
}

inline ComplexMatrix complex_merge(const Spectrogram& s) {
  ComplexMatrix c(static_cast<Eigen::Index>(s.bins), static_cast<Eigen::Index>(s.frames));
  for (std::size_t k = 0; k < s.bins; ++k) {
    for (std::size_t t = 0; t < s.frames; ++t) {
      c(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t)) = {s.at(0, k, t), s.at(1, k, t)};
    }
  }
  return c;
}

/// Precomputed analysis/synthesis state for one SpectralConfig. All transforms
/// here are linear; the *_adjoint members are their exact transposes, which
/// lets gradients flow through an audio-domain channel.
class StftEngine {
 public:
  explicit StftEngine(SpectralConfig cfg = {}) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const auto n = static_cast<std::size_t>(cfg_.n_fft);
    window_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {  // periodic Hann
      const double s = std::sin(std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
      window_[i] = s * s;
    }
    scale_ = cfg_.normalized ? 1.0 / std::sqrt(static_cast<double>(n)) : 1.0;

    const std::size_t len = cfg_.segment_length;
    std::vector<double> env(len, 0.0);
    for (std::size_t t = 0; t < cfg_.frames(); ++t) {
      for (std::size_t i = 0; i < n; ++i) env[t * hop() + i] += window_[i] * window_[i];
    }
    const double floor = 1e-3 * *std::max_element(env.begin(), env.end());
    divisor_.resize(len);
    for (std::size_t m = 0; m < len; ++m) {
      // Samples never touched by a window stay zero; weakly covered edge
      // samples are normalized by the floor instead of a vanishing envelope.
      divisor_[m] = env[m] == 0.0 ? 0.0 : 1.0 / std::max(env[m], floor);
    }
    fft_.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  }

  const SpectralConfig& config() const { return cfg_; }
  std::size_t bins() const { return cfg_.bins(); }
  std::size_t frames() const { return cfg_.frames(); }
  std::size_t length() const { return cfg_.segment_length; }

  /// samples (length) -> out (2 * bins * frames)
  void analyze(std::span<const float> samples, std::span<float> out) const {
    check_sizes(samples.size(), out.size());
    const auto n = static_cast<std::size_t>(cfg_.n_fft);
    const std::size_t plane = cfg_.plane_size(), nf = frames();
    std::vector<double> frame(n);
    std::vector<std::complex<double>> spec;
    for (std::size_t t = 0; t < nf; ++t) {
      for (std::size_t i = 0; i < n; ++i) frame[i] = window_[i] * samples[t * hop() + i];
      fft_.fwd(spec, frame);
      for (std::size_t k = 0; k < bins(); ++k) {
        out[k * nf + t] = static_cast<float>(spec[k].real() * scale_);
        out[plane + k * nf + t] = static_cast<float>(spec[k].imag() * scale_);
      }
    }
  }

  /// Least-squares overlap-add inverse: spec (2 * bins * frames) -> out (length)
  void synthesize(std::span<const float> spec, std::span<float> out) const {
    check_sizes(out.size(), spec.size());
    std::vector<double> acc(length(), 0.0);
    std::vector<double> frame;
    for (std::size_t t = 0; t < frames(); ++t) {
      inverse_frame(spec, t, frame);
      for (std::size_t i = 0; i < frame.size(); ++i) acc[t * hop() + i] += window_[i] * frame[i];
    }
    for (std::size_t m = 0; m < length(); ++m) out[m] = static_cast<float>(acc[m] * divisor_[m]);
  }

  /// Transpose of analyze: grad wrt spectrogram -> grad wrt samples.
  void analyze_adjoint(std::span<const float> grad_spec, std::span<float> grad_samples) const {
    check_sizes(grad_samples.size(), grad_spec.size());
    const auto n = static_cast<std::size_t>(cfg_.n_fft);
    const std::size_t plane = cfg_.plane_size(), nf = frames(), nb = bins();
    std::fill(grad_samples.begin(), grad_samples.end(), 0.0f);
    std::vector<double> acc(length(), 0.0);
    std::vector<std::complex<double>> y(nb);
    std::vector<double> frame;
    for (std::size_t t = 0; t < nf; ++t) {
      for (std::size_t k = 0; k < nb; ++k) {
        y[k] = {grad_spec[k * nf + t], grad_spec[plane + k * nf + t]};
      }
      // Re(sum_k G_k e^{i theta}) = (N/2) * irfft(Y) with doubled, real DC/Nyquist.
      y[0] = {2.0 * y[0].real(), 0.0};
      y[nb - 1] = {2.0 * y[nb - 1].real(), 0.0};
      fft_.inv(frame, y);
      const double s = scale_ * static_cast<double>(n) / 2.0;
      for (std::size_t i = 0; i < n; ++i) acc[t * hop() + i] += s * window_[i] * frame[i];
    }
    for (std::size_t m = 0; m < length(); ++m) grad_samples[m] = static_cast<float>(acc[m]);
  }

  /// Transpose of synthesize: grad wrt samples -> grad wrt spectrogram.
  void synthesize_adjoint(std::span<const float> grad_samples, std::span<float> grad_spec) const {
    check_sizes(grad_samples.size(), grad_spec.size());
    const auto n = static_cast<std::size_t>(cfg_.n_fft);
    const std::size_t plane = cfg_.plane_size(), nf = frames(), nb = bins();
    std::vector<double> g(n);
    std::vector<std::complex<double>> spec;
    const double inv = 1.0 / (scale_ * static_cast<double>(n));
    for (std::size_t t = 0; t < nf; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t m = t * hop() + i;
        g[i] = window_[i] * grad_samples[m] * divisor_[m];
      }
      fft_.fwd(spec, g);
      for (std::size_t k = 0; k < nb; ++k) {
        const bool edge = k == 0 || k == nb - 1;
        const double c = edge ? inv : 2.0 * inv;
        grad_spec[k * nf + t] = static_cast<float>(c * spec[k].real());
        grad_spec[plane + k * nf + t] = edge ? 0.0f : static_cast<float>(c * spec[k].imag());
      }
    }
  }

  Spectrogram stft(const Waveform& w) const {
    if (w.length() != length()) {
      throw ShapeError("stft: waveform has " + std::to_string(w.length()) + " samples, expected " +
                       std::to_string(length()));
    }
    if (w.sample_rate != cfg_.sample_rate) {
      throw ShapeError("stft: waveform rate " + std::to_string(w.sample_rate) + " Hz, expected " +
                       std::to_string(cfg_.sample_rate));
    }
    Spectrogram s(bins(), frames(), cfg_);
    analyze(w.samples, s.data);
    return s;
  }

  Waveform istft(const Spectrogram& s) const {
    if (s.bins != bins() || s.frames != frames() || s.data.size() != 2 * cfg_.plane_size()) {
      throw ShapeError("istft: spectrogram shape (2, " + std::to_string(s.bins) + ", " +
                       std::to_string(s.frames) + ") does not match config (2, " +
                       std::to_string(bins()) + ", " + std::to_string(frames()) + ")");
    }
    Waveform w;
    w.sample_rate = cfg_.sample_rate;
    w.samples.resize(length());
    synthesize(s.data, w.samples);
    return w;
  }

 private:
  std::size_t hop() const { return static_cast<std::size_t>(cfg_.hop); }

  void check_sizes(std::size_t samples, std::size_t spec) const {
    if (samples != length() || spec != 2 * cfg_.plane_size()) {
      throw ShapeError("spectral transform: buffer sizes do not match config");
    }
  }

  void inverse_frame(std::span<const float> spec, std::size_t t, std::vector<double>& frame) const {
    const std::size_t plane = cfg_.plane_size(), nf = frames(), nb = bins();
    std::vector<std::complex<double>> y(nb);
    for (std::size_t k = 0; k < nb; ++k) y[k] = {spec[k * nf + t], spec[plane + k * nf + t]};
    y[0].imag(0.0);
    y[nb - 1].imag(0.0);
    fft_.inv(frame, y);
    for (double& v : frame) v /= scale_;
  }

  SpectralConfig cfg_;
  std::vector<double> window_;
  std::vector<double> divisor_;
  double scale_ = 1.0;
  mutable Eigen::FFT<double> fft_;
};

inline Spectrogram stft(const Waveform& w, const SpectralConfig& cfg = {}) { return StftEngine(cfg).stft(w); }
inline Waveform istft(const Spectrogram& s, const SpectralConfig& cfg = {}) { return StftEngine(cfg).istft(s); }

// Flat tensor file: 16-byte header ("SWSP", u32 channels, u32 bins,
// u32 frames) followed by little-endian float32 data.
inline constexpr char kSpectrogramMagic[4] = {'S', 'W', 'S', 'P'};

inline void write_spectrogram(std::ostream& os, const Spectrogram& s) {
  os.write(kSpectrogramMagic, 4);
  binary::write<std::uint32_t>(os, 2);
  binary::write<std::uint32_t>(os, static_cast<std::uint32_t>(s.bins));
  binary::write<std::uint32_t>(os, static_cast<std::uint32_t>(s.frames));
  binary::write_floats(os, s.data);
}

inline Spectrogram read_spectrogram(std::istream& is, const SpectralConfig& cfg = {}) {
  char magic[4];
  is.read(magic, 4);
  if (!is || !std::equal(magic, magic + 4, kSpectrogramMagic)) throw FormatError("not a spectrogram tensor file");
  const auto channels = binary::read<std::uint32_t>(is);
  const auto bins = binary::read<std::uint32_t>(is);
  const auto frames = binary::read<std::uint32_t>(is);
  if (channels != 2) throw FormatError("spectrogram tensor must have 2 channels");
  if (static_cast<std::uint64_t>(bins) * frames > (1ull << 28)) throw FormatError("spectrogram tensor too large");
  Spectrogram s(bins, frames, cfg);
  binary::read_floats(is, s.data);
  return s;
}

inline void save_spectrogram(const std::filesystem::path& path, const Spectrogram& s) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  write_spectrogram(os, s);
}

inline Spectrogram load_spectrogram(const std::filesystem::path& path, const SpectralConfig& cfg = {}) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  return read_spectrogram(is, cfg);
}

}  // namespace stegowave
