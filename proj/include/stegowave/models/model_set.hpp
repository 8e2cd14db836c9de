#pragma once

// The three networks as one unit, plus the versioned checkpoint archive.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "stegowave/core/binary_io.hpp"
#include "stegowave/core/error.hpp"
#include "stegowave/core/hash.hpp"
#include "stegowave/models/networks.hpp"

namespace stegowave {

template <typename T>
struct ModelSet {
  ModelConfig config;
  Encoder<T> encoder;
  Decoder<T> decoder;
  Steganalyzer<T> steganalyzer;

  explicit ModelSet(const ModelConfig& cfg)
      : config((cfg.validate(), cfg)), encoder(cfg), decoder(cfg), steganalyzer(cfg) {}

  nn::ParamList<T> encoder_params() { return collect([](auto& m, auto& out) { m.encoder.params(out); }); }
  nn::ParamList<T> decoder_params() { return collect([](auto& m, auto& out) { m.decoder.params(out); }); }
  nn::ParamList<T> steganalyzer_params() { return collect([](auto& m, auto& out) { m.steganalyzer.params(out); }); }

  nn::ParamList<T> all_params() {
    auto out = encoder_params();
    for (auto* p : decoder_params()) out.push_back(p);
    for (auto* p : steganalyzer_params()) out.push_back(p);
    return out;
  }
  nn::BufferList<T> all_buffers() {
    nn::BufferList<T> out;
    encoder.buffers(out);
    decoder.buffers(out);
    steganalyzer.buffers(out);
    return out;
  }

  bool all_finite() {
    for (auto* p : all_params()) {
      for (T v : p->value) {
        if (!std::isfinite(v)) return false;
      }
    }
    return true;
  }

  void release_caches() {
    encoder.release();
    decoder.release();
    steganalyzer.release();
  }

 private:
  template <typename F>
  nn::ParamList<T> collect(F f) {
    nn::ParamList<T> out;
    f(*this, out);
    return out;
  }
};

struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> shape;
  std::vector<float> data;
};

/// Versioned binary archive:
///   "SWCKPT01" | u32 version | u64 spectral hash | u32 epoch
///   | u32 n_meta, (string key, string value)* | u32 n_tensors, tensor*
/// tensor = string name | u32 ndim | u32 dims[ndim] | u64 count | f32 data[count]
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;
  std::uint64_t spectral_hash = 0;
  std::uint32_t epoch = 0;
  std::map<std::string, std::string> meta;
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const {
    for (const auto& t : tensors) {
      if (t.name == name) return &t;
    }
    return nullptr;
  }
};

inline constexpr char kCheckpointMagic[8] = {'S', 'W', 'C', 'K', 'P', 'T', '0', '1'};

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write checkpoint: " + path.string());
    os.write(kCheckpointMagic, 8);
    binary::write<std::uint32_t>(os, Checkpoint::kVersion);
    binary::write<std::uint64_t>(os, ck.spectral_hash);
    binary::write<std::uint32_t>(os, ck.epoch);
    binary::write<std::uint32_t>(os, static_cast<std::uint32_t>(ck.meta.size()));
    for (const auto& [k, v] : ck.meta) {
      binary::write_string(os, k);
      binary::write_string(os, v);
    }
    binary::write<std::uint32_t>(os, static_cast<std::uint32_t>(ck.tensors.size()));
    for (const auto& t : ck.tensors) {
      binary::write_string(os, t.name);
      binary::write<std::uint32_t>(os, static_cast<std::uint32_t>(t.shape.size()));
      for (auto d : t.shape) binary::write<std::uint32_t>(os, d);
      binary::write<std::uint64_t>(os, t.data.size());
      binary::write_floats(os, t.data);
    }
    if (!os) throw IoError("failed writing checkpoint: " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read checkpoint: " + path.string());
  char magic[8];
  is.read(magic, 8);
  if (!is || !std::equal(magic, magic + 8, kCheckpointMagic)) throw FormatError("not a stegowave checkpoint: " + path.string());
  const auto version = binary::read<std::uint32_t>(is);
  if (version != Checkpoint::kVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  ck.spectral_hash = binary::read<std::uint64_t>(is);
  ck.epoch = binary::read<std::uint32_t>(is);
  const auto n_meta = binary::read<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    auto k = binary::read_string(is);
    ck.meta[k] = binary::read_string(is);
  }
  const auto n_tensors = binary::read<std::uint32_t>(is);
  ck.tensors.resize(n_tensors);
  for (auto& t : ck.tensors) {
    t.name = binary::read_string(is);
    const auto ndim = binary::read<std::uint32_t>(is);
    if (ndim > 8) throw FormatError("checkpoint tensor rank too large");
    t.shape.resize(ndim);
    std::uint64_t expect = 1;
    for (auto& d : t.shape) expect *= (d = binary::read<std::uint32_t>(is));
    const auto count = binary::read<std::uint64_t>(is);
    if (count != expect || count > (1ull << 31)) throw FormatError("checkpoint tensor '" + t.name + "' has inconsistent size");
    t.data.resize(count);
    binary::read_floats(is, t.data);
  }
  return ck;
}

/// Refuses checkpoints produced under a different spectral configuration.
inline void verify_spectral_hash(const Checkpoint& ck, std::uint64_t expected) {
  if (ck.spectral_hash != expected) {
    throw ConfigError("checkpoint config hash mismatch: checkpoint " + hex64(ck.spectral_hash) + ", current config " +
                      hex64(expected));
  }
}

inline void append_params(std::vector<NamedTensor>& out, const nn::ParamList<float>& params) {
  for (const auto* p : params) {
    NamedTensor t{p->name, {}, p->value};
    for (auto d : p->shape) t.shape.push_back(static_cast<std::uint32_t>(d));
    out.push_back(std::move(t));
  }
}

inline void append_buffers(std::vector<NamedTensor>& out, const nn::BufferList<float>& buffers) {
  for (const auto* b : buffers) {
    out.push_back({b->name, {static_cast<std::uint32_t>(b->value.size())}, b->value});
  }
}

inline void restore_params(const Checkpoint& ck, const nn::ParamList<float>& params) {
  for (auto* p : params) {
    const auto* t = ck.find(p->name);
    if (t == nullptr) throw FormatError("checkpoint is missing parameter '" + p->name + "'");
    if (t->data.size() != p->value.size()) {
      throw FormatError("checkpoint parameter '" + p->name + "' has " + std::to_string(t->data.size()) +
                        " values, model expects " + std::to_string(p->value.size()));
    }
    p->value = t->data;
  }
}

inline void restore_buffers(const Checkpoint& ck, const nn::BufferList<float>& buffers) {
  for (auto* b : buffers) {
    const auto* t = ck.find(b->name);
    if (t == nullptr || t->data.size() != b->value.size()) {
      throw FormatError("checkpoint is missing or mis-sized buffer '" + b->name + "'");
    }
    b->value = t->data;
  }
}

}  // namespace stegowave
