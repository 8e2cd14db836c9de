#pragma once

// Adversarial training loop: per batch, one (or more) steganalyzer updates on
// {carrier -> 0, stego -> 1}, then a joint encoder/decoder update on the
// weighted encoder objective with the non-saturating adversarial term.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "stegowave/audio/spectral.hpp"
#include "stegowave/core/error.hpp"
#include "stegowave/core/rng.hpp"
#include "stegowave/dataset/corpus.hpp"
#include "stegowave/dataset/pair_sampler.hpp"
#include "stegowave/models/model_set.hpp"
#include "stegowave/nn/adam.hpp"
#include "stegowave/pipeline.hpp"
#include "stegowave/training/config.hpp"
#include "stegowave/training/losses.hpp"
#include "stegowave/training/noise.hpp"
#include "stegowave/training/step.hpp"

namespace stegowave {

struct LossRecord {
  std::size_t epoch = 0;  // 1-based
  std::size_t step = 0;   // 1-based within the epoch
  double encoder = 0;     // L_e
  double decoder = 0;     // L_d
  double steganalyzer = 0;  // L_s
  double carrier_mse = 0;   // d(carrier, stego) in the spectrogram domain
  double adversarial = 0;   // generator-side cross-entropy

  bool all_finite() const {
    return std::isfinite(encoder) && std::isfinite(decoder) && std::isfinite(steganalyzer) &&
           std::isfinite(carrier_mse) && std::isfinite(adversarial);
  }
};

struct EpochSummary {
  std::size_t epoch = 0;
  double encoder = 0, decoder = 0, steganalyzer = 0, carrier_mse = 0;
};

inline EpochSummary summarize_epoch(std::span<const LossRecord> history, std::size_t epoch) {
  EpochSummary s{epoch};
  std::size_t n = 0;
  for (const auto& r : history) {
    if (r.epoch != epoch) continue;
    s.encoder += r.encoder;
    s.decoder += r.decoder;
    s.steganalyzer += r.steganalyzer;
    s.carrier_mse += r.carrier_mse;
    ++n;
  }
  if (n > 0) {
    s.encoder /= n;
    s.decoder /= n;
    s.steganalyzer /= n;
    s.carrier_mse /= n;
  }
  return s;
}

inline constexpr const char* kLossCsvHeader = "epoch,step,L_e,L_d,L_s,carrier_mse";

inline std::string loss_csv_line(const LossRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%zu,%zu,%.9g,%.9g,%.9g,%.9g", r.epoch, r.step, r.encoder, r.decoder,
                r.steganalyzer, r.carrier_mse);
  return buf;
}

/// Raised when a step produces a non-finite loss; carries the offending record.
class TrainingDiverged : public NumericError {
 public:
  explicit TrainingDiverged(const LossRecord& r)
      : NumericError("non-finite loss at epoch " + std::to_string(r.epoch) + " step " + std::to_string(r.step) +
                     ": " + loss_csv_line(r)),
        record(r) {}
  LossRecord record;
};

struct TrainHooks {
  std::filesystem::path checkpoint;     // written after every epoch when non-empty
  std::string config_text;              // stored in checkpoints
  std::ostream* loss_csv = nullptr;     // one line per step (header written by caller)
  std::function<void(const EpochSummary&)> on_epoch;
};

class Trainer {
 public:
  Trainer(const TrainConfig& cfg, const SpectralConfig& spectral)
      : cfg_((cfg.validate(), cfg)),
        engine_(spectral),
        models_(cfg.model_config()),
        gen_opt_(generator_params(models_), cfg.adam()),
        steg_opt_(models_.steganalyzer_params(), cfg.adam()),
        noise_rng_(derive_seed(cfg.seed, 0x6e6f697365ull)),
        sampler_rng_(derive_seed(cfg.seed, 0x73616d70ull)) {}

  ModelSet<float>& models() { return models_; }
  const TrainConfig& config() const { return cfg_; }
  const StftEngine& engine() const { return engine_; }
  std::size_t epochs_completed() const { return epoch_; }

  /// One adversarial update on a batch of (carrier, secret) waveforms.
  LossRecord train_step(std::span<const Waveform* const> carriers, std::span<const Waveform* const> secrets) {
    if (carriers.empty() || carriers.size() != secrets.size()) throw Error("train_step: empty or unmatched batch");
    const std::size_t n = carriers.size();

    std::vector<Waveform> noisy;
    std::vector<const Waveform*> carrier_in(carriers.begin(), carriers.end());
    if (cfg_.noise_setting == NoiseSetting::an) {
      noisy.reserve(n);
      for (std::size_t i = 0; i < n; ++i) noisy.push_back(add_channel_noise(*carriers[i], cfg_.noise_snr_db, noise_rng_));
      for (std::size_t i = 0; i < n; ++i) carrier_in[i] = &noisy[i];
    }
    const nn::Tensor<float> carrier = analyze_batch(engine_, carrier_in);
    const nn::Tensor<float> secret = analyze_batch(engine_, secrets);

    LossRecord rec;
    // Steganalyzer update on the detached stego batch. The encoder caches
    // from this forward are reused by the generator update below.
    const nn::Tensor<float> stego = models_.encoder.forward(carrier, secret, Mode::train);
    for (std::size_t k = 0; k < cfg_.steganalyzer_steps; ++k) {
      steg_opt_.zero_grad();
      const double ls = steganalyzer_pass(models_, carrier, stego, true);
      if (k == 0) rec.steganalyzer = ls;
      steg_opt_.step();
    }

    gen_opt_.zero_grad();
    GeneratorLosses g;
    if (cfg_.channel_consistency) {
      g = generator_pass(models_, carrier, secret, cfg_, true, &stego, AudioChannel{this});
    } else {
      g = generator_pass(models_, carrier, secret, cfg_, true, &stego);
    }
    rec.encoder = g.encoder;
    rec.decoder = g.decoder;
    rec.carrier_mse = g.carrier_mse;
    rec.adversarial = g.adversarial;
    if (!rec.all_finite()) throw TrainingDiverged(rec);
    gen_opt_.step();
    models_.release_caches();
    if (!models_.all_finite()) throw TrainingDiverged(rec);
    return rec;
  }

  /// Runs the remaining epochs over the corpus train split. Returns the loss
  /// records produced by this call.
  std::vector<LossRecord> train(const Corpus& corpus, const TrainHooks& hooks = {}) {
    if (!corpus.is_split()) throw Error("train: corpus has no train/test split");
    PairSampler sampler(corpus.train_ids, 0);
    sampler.rng() = sampler_rng_;
    const std::size_t steps = cfg_.steps_per_epoch > 0
                                  ? cfg_.steps_per_epoch
                                  : std::max<std::size_t>(1, corpus.train_ids.size() / cfg_.batch_size);
    std::vector<LossRecord> history;
    std::vector<const Waveform*> carriers(cfg_.batch_size), secrets(cfg_.batch_size);
    for (std::size_t epoch = epoch_; epoch < cfg_.epochs; ++epoch) {
      for (std::size_t step = 0; step < steps; ++step) {
        for (std::size_t b = 0; b < cfg_.batch_size; ++b) {
          const auto [c, s] = sampler.next();
          carriers[b] = &corpus.waveforms[c];
          secrets[b] = &corpus.waveforms[s];
        }
        LossRecord rec;
        try {
          rec = train_step(carriers, secrets);
        } catch (TrainingDiverged& e) {
          e.record.epoch = epoch + 1;
          e.record.step = step + 1;
          throw TrainingDiverged(e.record);
        }
        rec.epoch = epoch + 1;
        rec.step = step + 1;
        if (hooks.loss_csv != nullptr) *hooks.loss_csv << loss_csv_line(rec) << '\n';
        history.push_back(rec);
      }
      epoch_ = epoch + 1;
      sampler_rng_ = sampler.rng();
      if (hooks.loss_csv != nullptr) hooks.loss_csv->flush();
      if (!hooks.checkpoint.empty()) save_checkpoint(hooks.checkpoint, checkpoint(hooks.config_text));
      if (hooks.on_epoch) hooks.on_epoch(summarize_epoch(history, epoch_));
    }
    return history;
  }

  /// Full training state: weights, running statistics, optimizer moments and
  /// rng streams.
  Checkpoint checkpoint(const std::string& config_text = {}) {
    Checkpoint ck;
    ck.spectral_hash = engine_.config().hash();
    ck.epoch = static_cast<std::uint32_t>(epoch_);
    ck.meta["config"] = config_text;
    ck.meta["init_setting"] = to_string(models_.config.init);
    ck.meta["noise_setting"] = to_string(cfg_.noise_setting);
    ck.meta["rng.noise"] = noise_rng_.state();
    ck.meta["rng.sampler"] = sampler_rng_.state();
    ck.meta["adam.generator.steps"] = std::to_string(gen_opt_.steps());
    ck.meta["adam.steganalyzer.steps"] = std::to_string(steg_opt_.steps());
    append_params(ck.tensors, models_.all_params());
    append_buffers(ck.tensors, models_.all_buffers());
    append_moments(ck.tensors, gen_opt_, "adam.generator");
    append_moments(ck.tensors, steg_opt_, "adam.steganalyzer");
    return ck;
  }

  /// Restores a checkpoint produced by checkpoint(); continues from its epoch.
  void restore(const Checkpoint& ck) {
    verify_spectral_hash(ck, engine_.config().hash());
    restore_params(ck, models_.all_params());
    restore_buffers(ck, models_.all_buffers());
    epoch_ = ck.epoch;
    if (auto it = ck.meta.find("rng.noise"); it != ck.meta.end()) noise_rng_.set_state(it->second);
    if (auto it = ck.meta.find("rng.sampler"); it != ck.meta.end()) sampler_rng_.set_state(it->second);
    restore_moments(ck, gen_opt_, "adam.generator");
    restore_moments(ck, steg_opt_, "adam.steganalyzer");
  }

 private:
  static nn::ParamList<float> generator_params(ModelSet<float>& m) {
    auto p = m.encoder_params();
    for (auto* d : m.decoder_params()) p.push_back(d);
    return p;
  }

  static void append_moments(std::vector<NamedTensor>& out, nn::Adam<float>& opt, const std::string& prefix) {
    const auto& params = opt.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto n = static_cast<std::uint32_t>(params[i]->size());
      out.push_back({prefix + ".m." + params[i]->name, {n}, opt.first_moments()[i]});
      out.push_back({prefix + ".v." + params[i]->name, {n}, opt.second_moments()[i]});
    }
  }

  static void restore_moments(const Checkpoint& ck, nn::Adam<float>& opt, const std::string& prefix) {
    const auto steps = ck.meta.find(prefix + ".steps");
    if (steps == ck.meta.end()) return;  // weights-only checkpoint
    opt.set_steps(std::stoull(steps->second));
    const auto& params = opt.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto* m = ck.find(prefix + ".m." + params[i]->name);
      const auto* v = ck.find(prefix + ".v." + params[i]->name);
      if (m == nullptr || v == nullptr || m->data.size() != params[i]->size() || v->data.size() != params[i]->size()) {
        throw FormatError("checkpoint optimizer state missing for " + params[i]->name);
      }
      opt.first_moments()[i] = m->data;
      opt.second_moments()[i] = v->data;
    }
  }

  struct AudioChannel {
    Trainer* self;
    nn::Tensor<float> forward(const nn::Tensor<float>& x) const { return self->channel_forward(x); }
    nn::Tensor<float> adjoint(const nn::Tensor<float>& g) const { return self->channel_adjoint(g); }
  };

  // stego spectrogram -> audio -> (noise under AN) -> spectrogram
  nn::Tensor<float> channel_forward(const nn::Tensor<float>& stego) {
    nn::Tensor<float> out(stego.n(), stego.c(), stego.h(), stego.w());
    for (std::size_t i = 0; i < stego.n(); ++i) {
      Waveform w = synthesize_one(engine_, stego, i);
      if (cfg_.noise_setting == NoiseSetting::an) w = add_channel_noise(w, cfg_.noise_snr_db, noise_rng_);
      engine_.analyze(w.samples, {out.sample(i), out.sample_size()});
    }
    return out;
  }

  nn::Tensor<float> channel_adjoint(const nn::Tensor<float>& g) const {
    nn::Tensor<float> out(g.n(), g.c(), g.h(), g.w());
    std::vector<float> g_audio(engine_.length());
    for (std::size_t i = 0; i < g.n(); ++i) {
      engine_.analyze_adjoint({g.sample(i), g.sample_size()}, g_audio);
      engine_.synthesize_adjoint(g_audio, {out.sample(i), out.sample_size()});
    }
    return out;
  }

  TrainConfig cfg_;
  StftEngine engine_;
  ModelSet<float> models_;
  nn::Adam<float> gen_opt_;
  nn::Adam<float> steg_opt_;
  Rng noise_rng_;
  Rng sampler_rng_;
  std::size_t epoch_ = 0;
};

/// Loads model weights (and batch-norm statistics) from a checkpoint for inference.
inline ModelSet<float> models_from_checkpoint(const Checkpoint& ck, const TrainConfig& cfg) {
  ModelSet<float> m(cfg.model_config());
  restore_params(ck, m.all_params());
  restore_buffers(ck, m.all_buffers());
  return m;
}

}  // namespace stegowave
