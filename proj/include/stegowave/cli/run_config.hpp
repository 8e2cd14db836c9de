#pragma once

// Line-oriented "key = value" run configuration shared by all subcommands.
// Unknown keys are rejected so a typo never silently falls back to a default.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "stegowave/audio/spectral.hpp"
#include "stegowave/core/error.hpp"
#include "stegowave/dataset/corpus.hpp"
#include "stegowave/evaluation/fidelity.hpp"
#include "stegowave/evaluation/security.hpp"
#include "stegowave/training/config.hpp"

namespace stegowave {

struct RunConfig {
  SpectralConfig spectral;
  DatasetConfig dataset;
  TrainConfig train;
  EvalConfig eval;
  SecurityConfig security;
};

namespace detail {

inline std::string trim(std::string s) {
  s.erase(0, s.find_first_not_of(" \t\r"));
  const auto end = s.find_last_not_of(" \t\r");
  s.erase(end == std::string::npos ? 0 : end + 1);
  return s;
}

inline std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename U>
U parse_unsigned(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    const auto x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return static_cast<U>(x);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

struct Field {
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
};

template <typename U>
Field unsigned_field(const std::string& key, U& ref) {
  return {[&ref] { return std::to_string(ref); }, [&ref, key](const std::string& v) { ref = parse_unsigned<U>(key, v); }};
}
inline Field int_field(const std::string& key, int& ref) {
  return {[&ref] { return std::to_string(ref); }, [&ref, key](const std::string& v) { ref = parse_unsigned<int>(key, v); }};
}
inline Field double_field(const std::string& key, double& ref) {
  return {[&ref] { return num(ref); }, [&ref, key](const std::string& v) { ref = parse_double(key, v); }};
}
inline Field bool_field(const std::string& key, bool& ref) {
  return {[&ref] { return std::string(ref ? "true" : "false"); }, [&ref, key](const std::string& v) { ref = parse_bool(key, v); }};
}

// Every config key, bound to its field. Iteration order is the map order,
// which fixes the canonical text.
inline std::map<std::string, Field> fields(RunConfig& c) {
  std::map<std::string, Field> f;
  f["n_fft"] = int_field("n_fft", c.spectral.n_fft);
  f["hop"] = int_field("hop", c.spectral.hop);
  f["window"] = {[&c] { return c.spectral.window; }, [&c](const std::string& v) { c.spectral.window = v; }};
  f["sample_rate"] = int_field("sample_rate", c.spectral.sample_rate);
  f["segment_length"] = unsigned_field("segment_length", c.spectral.segment_length);
  f["normalized"] = bool_field("normalized", c.spectral.normalized);

  f["max_items"] = unsigned_field("max_items", c.dataset.max_items);
  f["test_fraction"] = double_field("test_fraction", c.dataset.test_fraction);
  f["split_seed"] = unsigned_field("split_seed", c.dataset.split_seed);

  auto& t = c.train;
  f["lambda_a"] = double_field("lambda_a", t.lambda_a);
  f["lambda_b"] = double_field("lambda_b", t.lambda_b);
  f["lambda_c"] = double_field("lambda_c", t.lambda_c);
  f["learning_rate"] = double_field("learning_rate", t.learning_rate);
  f["epochs"] = unsigned_field("epochs", t.epochs);
  f["batch_size"] = unsigned_field("batch_size", t.batch_size);
  f["noise_setting"] = {[&t] { return to_string(t.noise_setting); },
                        [&t](const std::string& v) {
                          if (v == "NOR" || v == "nor") {
                            t.noise_setting = NoiseSetting::nor;
                          } else if (v == "AN" || v == "an") {
                            t.noise_setting = NoiseSetting::an;
                          } else {
                            throw ConfigError("config key 'noise_setting': expected NOR or AN, got '" + v + "'");
                          }
                        }};
  f["noise_snr_db"] = double_field("noise_snr_db", t.noise_snr_db);
  f["seed"] = unsigned_field("seed", t.seed);
  f["adam_beta1"] = double_field("adam_beta1", t.adam_beta1);
  f["adam_beta2"] = double_field("adam_beta2", t.adam_beta2);
  f["adam_eps"] = double_field("adam_eps", t.adam_eps);
  f["steganalyzer_steps"] = unsigned_field("steganalyzer_steps", t.steganalyzer_steps);
  f["channel_consistency"] = bool_field("channel_consistency", t.channel_consistency);
  f["steps_per_epoch"] = unsigned_field("steps_per_epoch", t.steps_per_epoch);

  auto& m = t.model;
  f["width_divisor"] = unsigned_field("width_divisor", m.width_divisor);
  f["hpf_filters"] = unsigned_field("hpf_filters", m.hpf_filters);
  f["fc1"] = unsigned_field("fc1", m.fc1);
  f["fc2"] = unsigned_field("fc2", m.fc2);
  f["k3_variant"] = {[&m] { return std::string(m.k3_variant == K3Variant::corrected ? "corrected" : "printed"); },
                     [&m](const std::string& v) {
                       if (v == "corrected") {
                         m.k3_variant = K3Variant::corrected;
                       } else if (v == "printed") {
                         m.k3_variant = K3Variant::printed;
                       } else {
                         throw ConfigError("config key 'k3_variant': expected corrected or printed, got '" + v + "'");
                       }
                     }};
  f["init"] = {[&m] { return to_string(m.init); },
               [&m](const std::string& v) {
                 if (v == "RAN" || v == "ran") {
                   m.init = InitSetting::ran;
                 } else if (v == "HPF" || v == "hpf") {
                   m.init = InitSetting::hpf;
                 } else {
                   throw ConfigError("config key 'init': expected RAN or HPF, got '" + v + "'");
                 }
               }};

  f["eval_max_pairs"] = unsigned_field("eval_max_pairs", c.eval.max_pairs);
  f["eval_seed"] = unsigned_field("eval_seed", c.eval.seed);
  f["eval_batch"] = unsigned_field("eval_batch", c.eval.batch_size);

  auto& s = c.security;
  f["n_stego"] = unsigned_field("n_stego", s.n_stego);
  f["security_seed"] = unsigned_field("security_seed", s.seed);
  f["srm_q"] = double_field("srm_q", s.srm.q);
  f["srm_T"] = int_field("srm_T", s.srm.T);
  f["linear_iterations"] = unsigned_field("linear_iterations", s.linear.iterations);
  f["linear_learning_rate"] = double_field("linear_learning_rate", s.linear.learning_rate);
  f["linear_l2"] = double_field("linear_l2", s.linear.l2);
  f["cnn_epochs"] = unsigned_field("cnn_epochs", s.cnn_epochs);
  f["cnn_batch"] = unsigned_field("cnn_batch", s.cnn_batch);
  f["cnn_learning_rate"] = double_field("cnn_learning_rate", s.cnn_learning_rate);
  return f;
}

}  // namespace detail

/// Applies one key/value pair; throws ConfigError for unknown keys or bad values.
inline void set_config_value(RunConfig& c, const std::string& key, const std::string& value) {
  auto f = detail::fields(c);
  const auto it = f.find(key);
  if (it == f.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(value);
}

inline void validate(const RunConfig& c) {
  c.spectral.validate();
  c.train.validate();
  c.security.srm.validate();
  if (!(c.dataset.test_fraction > 0 && c.dataset.test_fraction < 1)) throw ConfigError("test_fraction must lie in (0, 1)");
  if (c.dataset.max_items == 0) throw ConfigError("max_items must be >= 1");
}

/// Parses config text on top of `base`. Blank lines and '#' comments are ignored.
inline RunConfig parse_config_text(const std::string& text, RunConfig base = {}) {
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    set_config_value(base, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  validate(base);
  return base;
}

inline RunConfig load_config_file(const std::filesystem::path& path, RunConfig base = {}) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config file: " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str(), std::move(base));
}

/// Every key in a fixed order; parse_config_text(config_text(c)) == c.
inline std::string config_text(const RunConfig& c) {
  RunConfig copy = c;
  std::string out;
  for (const auto& [key, field] : detail::fields(copy)) out += key + " = " + field.get() + "\n";
  return out;
}

}  // namespace stegowave
