#pragma once

// Fixed-length corpora built from a directory of WAV files, train/test
// splitting and the line-oriented manifest format.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "stegowave/audio/spectral.hpp"
#include "stegowave/audio/wav_io.hpp"
#include "stegowave/core/binary_io.hpp"
#include "stegowave/core/error.hpp"
#include "stegowave/core/hash.hpp"
#include "stegowave/core/rng.hpp"

namespace stegowave {

struct DatasetConfig {
  std::size_t max_items = 10000;
  double test_fraction = 0.25;
  std::uint64_t split_seed = 17;
};

struct CorpusItem {
  std::filesystem::path source;
  std::size_t segment = 0;
};

enum class Split { train, test };

struct Corpus {
  std::vector<CorpusItem> items;
  std::vector<Waveform> waveforms;  // parallel to items, canonical length
  std::vector<std::size_t> train_ids;
  std::vector<std::size_t> test_ids;
  std::uint64_t split_seed = 0;
  double test_fraction = 0.25;
  std::uint64_t config_hash = 0;

  std::size_t size() const { return items.size(); }
  bool is_split() const { return !train_ids.empty() || !test_ids.empty(); }
  const std::vector<std::size_t>& ids(Split s) const { return s == Split::train ? train_ids : test_ids; }
};

namespace detail {

inline bool has_wav_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".wav";
}

// Optional on-disk cache of resampled, normalized waveforms keyed by file
// identity and target rate. Enabled by STEGOWAVE_CACHE.
inline std::filesystem::path cache_path_for(const std::filesystem::path& src, int rate) {
  const char* dir = std::getenv("STEGOWAVE_CACHE");
  if (dir == nullptr || *dir == '\0') return {};
  std::error_code ec;
  const auto size = std::filesystem::file_size(src, ec);
  const auto mtime = std::filesystem::last_write_time(src, ec).time_since_epoch().count();
  std::ostringstream key;
  key << std::filesystem::absolute(src).string() << '|' << size << '|' << mtime << '|' << rate;
  return std::filesystem::path(dir) / ("wave-" + hex64(fnv1a64(key.str())) + ".f32");
}

inline Waveform load_cached(const std::filesystem::path& src, int rate) {
  const auto cached = cache_path_for(src, rate);
  if (!cached.empty() && std::filesystem::exists(cached)) {
    std::ifstream is(cached, std::ios::binary);
    Waveform w;
    w.sample_rate = rate;
    w.samples.resize(binary::read<std::uint64_t>(is));
    binary::read_floats(is, w.samples);
    return w;
  }
  Waveform w = load_wav(src, rate);
  if (!cached.empty()) {
    std::filesystem::create_directories(cached.parent_path());
    std::ofstream os(cached, std::ios::binary | std::ios::trunc);
    binary::write<std::uint64_t>(os, w.samples.size());
    binary::write_floats(os, w.samples);
  }
  return w;
}

}  // namespace detail

/// WAV files directly inside `dir`, sorted lexicographically by filename.
inline std::vector<std::filesystem::path> list_audio_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && detail::has_wav_extension(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

/// Loads every WAV in `dir`, cuts canonical segments and keeps the first
/// `max_items` in (filename, segment) order.
inline Corpus prepare_corpus(const std::filesystem::path& dir, const SpectralConfig& cfg,
                             std::size_t max_items) {
  const auto files = list_audio_files(dir);
  if (files.empty()) throw IoError("empty directory: no .wav files in " + dir.string());
  Corpus corpus;
  corpus.config_hash = cfg.hash();
  for (const auto& file : files) {
    if (corpus.size() >= max_items) break;
    const Waveform w = detail::load_cached(file, cfg.sample_rate);
    auto segments = fix_length(w, cfg.segment_length);
    for (std::size_t s = 0; s < segments.size() && corpus.size() < max_items; ++s) {
      corpus.items.push_back({std::filesystem::absolute(file).lexically_normal(), s});
      corpus.waveforms.push_back(std::move(segments[s]));
    }
  }
  if (corpus.items.empty()) {
    throw Error("zero usable segments: every file in " + dir.string() + " is shorter than " +
                std::to_string(cfg.segment_length) + " samples");
  }
  return corpus;
}

/// Number of held-out items for a split fraction; at least one item each side.
inline std::size_t test_count(std::size_t n, double test_fraction) {
  auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * test_fraction + 0.5));
  return std::clamp<std::size_t>(n_test, 1, n - 1);
}

/// Deterministic shuffled split. `test_fraction` of the items (0.25 by
/// default) go to the test set.
inline void split(Corpus& c, std::uint64_t seed, double test_fraction = 0.25) {
  if (c.size() < 4) throw Error("corpus too small to split: " + std::to_string(c.size()) + " items (need >= 4)");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
  std::vector<std::size_t> perm(c.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  Rng rng(seed);
  for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  const std::size_t n_test = test_count(c.size(), test_fraction);
  c.test_ids.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  c.train_ids.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  std::sort(c.test_ids.begin(), c.test_ids.end());
  std::sort(c.train_ids.begin(), c.train_ids.end());
  c.split_seed = seed;
  c.test_fraction = test_fraction;
}

// ---------------------------------------------------------------------------
// Manifest: "key = value" header lines, then one tab-separated record per
// item: source path, segment index, split tag.

inline void write_manifest(std::ostream& os, const Corpus& c) {
  if (!c.is_split()) throw Error("write_manifest: corpus has no split");
  std::vector<char> tag(c.size(), '?');
  for (auto i : c.train_ids) tag[i] = 'r';
  for (auto i : c.test_ids) tag[i] = 'e';
  os << "# stegowave corpus manifest\n";
  os << "version = 1\n";
  os << "seed = " << c.split_seed << "\n";
  os << "test_fraction = " << c.test_fraction << "\n";
  os << "config_hash = " << hex64(c.config_hash) << "\n";
  os << "items = " << c.size() << "\n";
  for (std::size_t i = 0; i < c.size(); ++i) {
    os << c.items[i].source.string() << '\t' << c.items[i].segment << '\t'
       << (tag[i] == 'r' ? "train" : "test") << '\n';
  }
}

inline void save_manifest(const std::filesystem::path& path, const Corpus& c) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write manifest: " + path.string());
  write_manifest(os, c);
}

/// Reads a manifest and reloads the referenced segments. The stored config
/// hash must match `cfg`.
inline Corpus load_corpus(const std::filesystem::path& manifest, const SpectralConfig& cfg) {
  std::ifstream is(manifest);
  if (!is) throw IoError("cannot read manifest: " + manifest.string());
  Corpus c;
  std::map<std::string, std::string> header;
  std::string line;
  std::size_t expected = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw FormatError("malformed manifest line: " + line);
      auto trim = [](std::string s) {
        s.erase(0, s.find_first_not_of(" \t"));
        s.erase(s.find_last_not_of(" \t\r") + 1);
        return s;
      };
      header[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
      continue;
    }
    const auto tab2 = line.find('\t', tab + 1);
    if (tab2 == std::string::npos) throw FormatError("malformed manifest record: " + line);
    const std::string split_tag = line.substr(tab2 + 1);
    const std::size_t idx = c.items.size();
    c.items.push_back({line.substr(0, tab), std::stoul(line.substr(tab + 1, tab2 - tab - 1))});
    if (split_tag == "train") {
      c.train_ids.push_back(idx);
    } else if (split_tag == "test") {
      c.test_ids.push_back(idx);
    } else {
      throw FormatError("unknown split tag '" + split_tag + "' in manifest");
    }
  }
  try {
    c.split_seed = std::stoull(header.at("seed"));
    c.test_fraction = std::stod(header.at("test_fraction"));
    c.config_hash = std::stoull(header.at("config_hash"), nullptr, 16);
    expected = std::stoul(header.at("items"));
  } catch (const std::out_of_range&) {
    throw FormatError("manifest header incomplete: " + manifest.string());
  }
  if (expected != c.size()) throw FormatError("manifest item count mismatch");
  if (c.config_hash != cfg.hash()) {
    throw ConfigError("manifest config hash " + hex64(c.config_hash) + " does not match spectral config hash " +
                      hex64(cfg.hash()));
  }

  std::map<std::filesystem::path, std::vector<Waveform>> segments;
  c.waveforms.reserve(c.size());
  for (const auto& item : c.items) {
    auto it = segments.find(item.source);
    if (it == segments.end()) {
      it = segments.emplace(item.source, fix_length(detail::load_cached(item.source, cfg.sample_rate),
                                                    cfg.segment_length)).first;
    }
    if (item.segment >= it->second.size()) {
      throw FormatError("manifest references missing segment " + std::to_string(item.segment) + " of " +
                        item.source.string());
    }
    c.waveforms.push_back(it->second[item.segment]);
  }
  return c;
}

}  // namespace stegowave
