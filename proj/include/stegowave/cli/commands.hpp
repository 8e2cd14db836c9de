#pragma once

// Subcommand implementations. Each takes a plain options struct so tests can
// drive them in-process; the executable only parses flags into these.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "stegowave/audio/spectral.hpp"
#include "stegowave/audio/wav_io.hpp"
#include "stegowave/cli/run_config.hpp"
#include "stegowave/dataset/corpus.hpp"
#include "stegowave/evaluation/fidelity.hpp"
#include "stegowave/evaluation/plot.hpp"
#include "stegowave/evaluation/reports.hpp"
#include "stegowave/evaluation/security.hpp"
#include "stegowave/models/model_set.hpp"
#include "stegowave/pipeline.hpp"
#include "stegowave/training/trainer.hpp"

namespace stegowave::cli {

namespace fs = std::filesystem;

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write file: " + path.string());
  os << text;
  if (!os) throw IoError("failed writing file: " + path.string());
}

// ---------------------------------------------------------------- prepare

struct PrepareOptions {
  fs::path data_dir;
  fs::path manifest;
};

inline Corpus cmd_prepare(const RunConfig& cfg, const PrepareOptions& opt, std::ostream& log) {
  validate(cfg);
  Corpus corpus = prepare_corpus(opt.data_dir, cfg.spectral, cfg.dataset.max_items);
  split(corpus, cfg.dataset.split_seed, cfg.dataset.test_fraction);
  if (opt.manifest.has_parent_path()) fs::create_directories(opt.manifest.parent_path());
  save_manifest(opt.manifest, corpus);
  log << "items " << corpus.size() << " train " << corpus.train_ids.size() << " test " << corpus.test_ids.size()
      << "\n";
  return corpus;
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  fs::path manifest;
  fs::path checkpoint;
  fs::path loss_csv;
  bool resume = false;
};

/// Trains and writes the checkpoint after every epoch (and once before the
/// first, so zero epochs still yields initialized models).
inline void cmd_train(const RunConfig& cfg, const TrainOptions& opt, std::ostream& log) {
  validate(cfg);
  const Corpus corpus = load_corpus(opt.manifest, cfg.spectral);
  Trainer trainer(cfg.train, cfg.spectral);
  const std::string text = config_text(cfg);
  bool append = false;
  if (opt.resume && fs::exists(opt.checkpoint)) {
    const Checkpoint ck = load_checkpoint(opt.checkpoint);
    trainer.restore(ck);
    append = true;
    log << "resumed at epoch " << trainer.epochs_completed() << "\n";
  }
  if (opt.checkpoint.has_parent_path()) fs::create_directories(opt.checkpoint.parent_path());
  if (opt.loss_csv.has_parent_path()) fs::create_directories(opt.loss_csv.parent_path());
  std::ofstream csv(opt.loss_csv, append ? std::ios::app : std::ios::trunc);
  if (!csv) throw IoError("cannot write loss history: " + opt.loss_csv.string());
  if (!append) csv << kLossCsvHeader << "\n";
  if (trainer.epochs_completed() == 0) save_checkpoint(opt.checkpoint, trainer.checkpoint(text));
  TrainHooks hooks;
  hooks.checkpoint = opt.checkpoint;
  hooks.config_text = text;
  hooks.loss_csv = &csv;
  hooks.on_epoch = [&log](const EpochSummary& s) {
    char buf[200];
    std::snprintf(buf, sizeof buf, "epoch %zu  L_e %.6g  L_d %.6g  L_s %.6g  carrier_mse %.6g\n", s.epoch, s.encoder,
                  s.decoder, s.steganalyzer, s.carrier_mse);
    log << buf << std::flush;
  };
  trainer.train(corpus, hooks);
}

// ---------------------------------------------------------------- model loading

struct LoadedModel {
  RunConfig config;  // as recorded in the checkpoint
  ModelSet<float> models;
  StftEngine engine;
};

/// Loads a checkpoint for inference. The spectral configuration of the
/// current run must match the one the checkpoint was trained under.
inline LoadedModel load_model(const fs::path& path, const RunConfig& current) {
  const Checkpoint ck = load_checkpoint(path);
  verify_spectral_hash(ck, current.spectral.hash());
  RunConfig recorded = current;
  if (const auto it = ck.meta.find("config"); it != ck.meta.end() && !it->second.empty()) {
    recorded = parse_config_text(it->second);
  }
  ModelSet<float> models = models_from_checkpoint(ck, recorded.train);
  return {recorded, std::move(models), StftEngine(current.spectral)};
}

// ---------------------------------------------------------------- embed / extract / detect

struct EmbedOptions {
  fs::path checkpoint;
  fs::path carrier;
  fs::path secret;
  fs::path output;
  std::size_t carrier_segment = 0;
  std::size_t secret_segment = 0;
  bool all_segments = false;
  std::optional<fs::path> dump_spectrogram;
  SampleFormat format = SampleFormat::pcm16;
};

namespace detail {

inline std::vector<Waveform> canonical_segments(const fs::path& path, const SpectralConfig& spec, Normalize norm) {
  const Waveform w = load_wav(path, spec.sample_rate, norm);
  auto segs = fix_length(w, spec.segment_length);
  if (segs.empty()) {
    throw Error("audio too short: " + path.string() + " has " + std::to_string(w.length()) + " samples after resampling, need " +
                std::to_string(spec.segment_length));
  }
  return segs;
}

inline fs::path segment_path(const fs::path& base, std::size_t k) {
  return base.parent_path() / (base.stem().string() + "_seg" + std::to_string(k) + base.extension().string());
}

}  // namespace detail

/// Writes stego audio; returns the paths written.
inline std::vector<fs::path> cmd_embed(const RunConfig& cfg, const EmbedOptions& opt) {
  LoadedModel m = load_model(opt.checkpoint, cfg);
  const auto carriers = detail::canonical_segments(opt.carrier, cfg.spectral, Normalize::peak);
  const auto secrets = detail::canonical_segments(opt.secret, cfg.spectral, Normalize::peak);
  if (opt.output.has_parent_path()) fs::create_directories(opt.output.parent_path());
  std::vector<fs::path> written;
  auto run = [&](const Waveform& c, const Waveform& s, const fs::path& out) {
    const Spectrogram stego = encoder_forward(m.models, m.engine, m.engine.stft(c), m.engine.stft(s));
    if (opt.dump_spectrogram && written.empty()) save_spectrogram(*opt.dump_spectrogram, stego);
    write_wav(out, m.engine.istft(stego), opt.format);
    written.push_back(out);
  };
  if (opt.all_segments) {
    for (std::size_t k = 0; k < carriers.size(); ++k) {
      run(carriers[k], secrets[std::min(k, secrets.size() - 1)], detail::segment_path(opt.output, k));
    }
    return written;
  }
  if (opt.carrier_segment >= carriers.size()) {
    throw Error("carrier has " + std::to_string(carriers.size()) + " segments, requested segment " +
                std::to_string(opt.carrier_segment));
  }
  if (opt.secret_segment >= secrets.size()) {
    throw Error("secret has " + std::to_string(secrets.size()) + " segments, requested segment " +
                std::to_string(opt.secret_segment));
  }
  run(carriers[opt.carrier_segment], secrets[opt.secret_segment], opt.output);
  return written;
}

struct ExtractOptions {
  fs::path checkpoint;
  fs::path stego;
  fs::path output;
  SampleFormat format = SampleFormat::pcm16;
};

/// The stego file must already be canonical: resampled to the model rate and
/// exactly one segment long. Its level is kept as received.
inline void cmd_extract(const RunConfig& cfg, const ExtractOptions& opt) {
  LoadedModel m = load_model(opt.checkpoint, cfg);
  const Waveform w = load_wav(opt.stego, cfg.spectral.sample_rate, Normalize::none);
  if (w.length() != cfg.spectral.segment_length) {
    throw ShapeError("stego length mismatch: " + std::to_string(w.length()) + " samples, expected " +
                     std::to_string(cfg.spectral.segment_length));
  }
  const Spectrogram revealed = decoder_forward(m.models, m.engine, m.engine.stft(w));
  if (opt.output.has_parent_path()) fs::create_directories(opt.output.parent_path());
  write_wav(opt.output, m.engine.istft(revealed), opt.format);
}

struct DetectOptions {
  fs::path checkpoint;
  fs::path audio;
};

/// Stego probability of the first canonical segment.
inline double cmd_detect(const RunConfig& cfg, const DetectOptions& opt) {
  LoadedModel m = load_model(opt.checkpoint, cfg);
  const auto segs = detail::canonical_segments(opt.audio, cfg.spectral, Normalize::peak);
  return steganalyzer_forward(m.models, m.engine, m.engine.stft(segs.front())).second;
}

// ---------------------------------------------------------------- evaluate

enum class EvalMode { fidelity, robustness, security };

struct EvaluateOptions {
  fs::path checkpoint;
  fs::path manifest;
  EvalMode mode = EvalMode::fidelity;
  double snr_db = 60.0;
  std::optional<std::size_t> n_stego;
  bool shuffle_labels = false;
  fs::path report_prefix;  // writes <prefix>.txt, <prefix>.csv and, for metrics, <prefix>_pairs.csv
};

struct EvaluateResult {
  std::optional<MetricsReport> metrics;
  std::vector<DetectorReport> detectors;
  std::string table;
};

inline EvaluateResult cmd_evaluate(const RunConfig& cfg, const EvaluateOptions& opt) {
  LoadedModel m = load_model(opt.checkpoint, cfg);
  const Corpus corpus = load_corpus(opt.manifest, cfg.spectral);
  EvaluateResult result;
  const fs::path prefix = opt.report_prefix;
  if (opt.mode == EvalMode::security) {
    SecurityConfig sc = cfg.security;
    if (opt.n_stego) sc.n_stego = *opt.n_stego;
    sc.shuffle_labels = opt.shuffle_labels;
    const std::string method = "stegowave-" + to_string(m.config.train.model.init) + "/" +
                               to_string(m.config.train.noise_setting);
    result.detectors = security_eval(m.models, m.engine, corpus, sc, method);
    result.table = format_detector_table(result.detectors);
    write_text(prefix.string() + ".txt", result.table);
    write_text(prefix.string() + ".csv", detector_csv(result.detectors));
    return result;
  }
  MetricsReport r = opt.mode == EvalMode::fidelity ? evaluate_fidelity(m.models, m.engine, corpus, cfg.eval)
                                                   : evaluate_robustness(m.models, m.engine, corpus, opt.snr_db, cfg.eval);
  r.noise = m.config.train.noise_setting;
  result.table = format_metrics_table(r);
  write_text(prefix.string() + ".txt", result.table);
  write_text(prefix.string() + ".csv", metrics_csv(r));
  write_text(prefix.string() + "_pairs.csv", pairs_csv(r));
  result.metrics = std::move(r);
  return result;
}

// ---------------------------------------------------------------- plot

struct PlotOptions {
  fs::path input;  // .wav (first segment) or a saved spectrogram tensor
  fs::path output;
  std::size_t segment = 0;
  PlotConfig plot;
};

inline void cmd_plot(const RunConfig& cfg, const PlotOptions& opt) {
  Spectrogram s;
  std::string ext = opt.input.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (ext == ".wav") {
    const auto segs = detail::canonical_segments(opt.input, cfg.spectral, Normalize::none);
    if (opt.segment >= segs.size()) throw Error("input has " + std::to_string(segs.size()) + " segments");
    s = StftEngine(cfg.spectral).stft(segs[opt.segment]);
  } else {
    s = load_spectrogram(opt.input, cfg.spectral);
  }
  if (opt.output.has_parent_path()) fs::create_directories(opt.output.parent_path());
  write_spectrogram_ppm(opt.output, s, opt.plot);
}

}  // namespace stegowave::cli
