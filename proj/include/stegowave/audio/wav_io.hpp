#pragma once

// RIFF/WAVE reading and writing. Reads 16-bit integer PCM and 32-bit float,
// mono or multichannel (downmixed by channel mean). Writes 16-bit PCM or
// 32-bit float mono.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "stegowave/audio/resample.hpp"
#include "stegowave/audio/waveform.hpp"
#include "stegowave/core/binary_io.hpp"
#include "stegowave/core/error.hpp"

namespace stegowave {

enum class SampleFormat { pcm16, float32 };

enum class Normalize {
  peak,  ///< divide by the maximum absolute sample
  none,  ///< keep amplitudes as stored
};

namespace detail {

inline std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
inline std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

/// Reads a WAV file as-is: mono samples (channel mean) at the file's rate.
/// Integer PCM is scaled to [-1, 1) by 1/32768.
inline Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open audio file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  const auto where = " (" + path.string() + ")";
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("not a RIFF/WAVE file" + where);
  }

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  bool have_fmt = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t len = detail::le32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min<std::size_t>(len, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw FormatError("truncated fmt chunk" + where);
      const unsigned char* f = bytes.data() + body;
      format = detail::le16(f);
      channels = detail::le16(f + 2);
      rate = detail::le32(f + 4);
      bits = detail::le16(f + 14);
      if (format == 0xFFFE && avail >= 26) format = detail::le16(f + 24);  // extensible
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = avail;
    }
    pos = body + len + (len & 1u);
  }
  if (!have_fmt) throw FormatError("missing fmt chunk" + where);
  if (data == nullptr) throw FormatError("missing data chunk" + where);
  if (channels == 0 || rate == 0) throw FormatError("invalid channel count or sample rate" + where);

  const bool is_pcm16 = format == 1 && bits == 16;
  const bool is_float = format == 3 && bits == 32;
  if (!is_pcm16 && !is_float) {
    throw FormatError("unsupported WAV encoding (format " + std::to_string(format) + ", " +
                      std::to_string(bits) + " bits); need 16-bit PCM or 32-bit float" + where);
  }

  const std::size_t frame_bytes = static_cast<std::size_t>(channels) * (bits / 8);
  const std::size_t frames = data_len / frame_bytes;
  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  w.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const unsigned char* p = data + i * frame_bytes;
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      if (is_pcm16) {
        acc += static_cast<std::int16_t>(detail::le16(p + 2 * c)) / 32768.0;
      } else {
        float v;
        std::memcpy(&v, p + 4 * c, 4);
        acc += v;
      }
    }
    w.samples[i] = static_cast<float>(acc / channels);
  }
  return w;
}

/// Writes mono audio. 16-bit output uses the same 1/32768 scale as reading
/// and saturates at the integer range.
inline void write_wav(const std::filesystem::path& path, const Waveform& w,
                      SampleFormat fmt = SampleFormat::pcm16) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write audio file: " + path.string());
  const std::uint16_t bits = fmt == SampleFormat::pcm16 ? 16 : 32;
  const std::uint16_t block = bits / 8;
  const auto data_len = static_cast<std::uint32_t>(w.samples.size() * block);

  out.write("RIFF", 4);
  binary::write<std::uint32_t>(out, 36 + data_len);
  out.write("WAVEfmt ", 8);
  binary::write<std::uint32_t>(out, 16);
  binary::write<std::uint16_t>(out, fmt == SampleFormat::pcm16 ? 1 : 3);
  binary::write<std::uint16_t>(out, 1);
  binary::write<std::uint32_t>(out, static_cast<std::uint32_t>(w.sample_rate));
  binary::write<std::uint32_t>(out, static_cast<std::uint32_t>(w.sample_rate) * block);
  binary::write<std::uint16_t>(out, block);
  binary::write<std::uint16_t>(out, bits);
  out.write("data", 4);
  binary::write<std::uint32_t>(out, data_len);
  for (float v : w.samples) {
    if (fmt == SampleFormat::pcm16) {
      const double s = std::clamp(std::round(static_cast<double>(v) * 32768.0), -32768.0, 32767.0);
      binary::write<std::int16_t>(out, static_cast<std::int16_t>(s));
    } else {
      binary::write<float>(out, v);
    }
  }
  if (!out) throw IoError("failed writing audio file: " + path.string());
}

/// Reads, downmixes and resamples to `target_rate`, then optionally scales so
/// the peak magnitude is 1 (silence guarded by a 1e-8 floor).
inline Waveform load_wav(const std::filesystem::path& path, int target_rate = kCanonicalRate,
                         Normalize norm = Normalize::peak) {
  if (!std::filesystem::exists(path)) throw IoError("audio file not found: " + path.string());
  Waveform w = read_wav(path);
  if (w.samples.empty()) throw FormatError("zero-length audio: " + path.string());
  w.samples = resample(w.samples, w.sample_rate, target_rate);
  w.sample_rate = target_rate;
  if (w.samples.empty()) throw FormatError("zero-length audio after resampling: " + path.string());
  if (!w.all_finite()) throw FormatError("non-finite samples in " + path.string());
  if (norm == Normalize::peak) {
    const float scale = 1.0f / std::max(w.peak(), 1e-8f);
    for (float& v : w.samples) v = std::clamp(v * scale, -1.0f, 1.0f);
  }
  return w;
}

}  // namespace stegowave
