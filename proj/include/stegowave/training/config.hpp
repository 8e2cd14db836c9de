#pragma once

#include <cstdint>
#include <string>

#include "stegowave/core/error.hpp"
#include "stegowave/core/rng.hpp"
#include "stegowave/models/networks.hpp"
#include "stegowave/nn/adam.hpp"

namespace stegowave {

enum class NoiseSetting { nor, an };

inline std::string to_string(NoiseSetting s) { return s == NoiseSetting::nor ? "NOR" : "AN"; }

struct TrainConfig {
  double lambda_a = 0.6;
  double lambda_b = 0.8;
  double lambda_c = 1.0;
  double learning_rate = 1e-4;
  std::size_t epochs = 75;
  std::size_t batch_size = 8;
  NoiseSetting noise_setting = NoiseSetting::nor;
  double noise_snr_db = 60.0;
  std::uint64_t seed = 1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t steganalyzer_steps = 1;  // steganalyzer updates per batch
  bool channel_consistency = false;    // decoder sees STFT(ISTFT(stego)) during training
  std::size_t steps_per_epoch = 0;     // 0: floor(train items / batch_size)
  ModelConfig model;                   // init setting (RAN/HPF) lives here

  /// The model seed is derived from the training seed.
  ModelConfig model_config() const {
    ModelConfig m = model;
    m.seed = derive_seed(seed, 0x6d6f64656cull);
    return m;
  }

  nn::AdamConfig adam() const { return {learning_rate, adam_beta1, adam_beta2, adam_eps}; }

  void validate() const {
    if (lambda_a < 0 || lambda_b < 0 || lambda_c < 0) throw ConfigError("loss weights must be non-negative");
    if (!(learning_rate > 0)) throw ConfigError("learning_rate must be positive");
    if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
    if (steganalyzer_steps == 0) throw ConfigError("steganalyzer_steps must be >= 1");
    model.validate();
  }
};

}  // namespace stegowave
