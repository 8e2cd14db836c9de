#pragma once

// Fidelity and channel-robustness measurement over the test split. Both run
// the full transmission path (encoder, ISTFT, optional noise, STFT, decoder):
// MSE is taken between spectrograms, SNR between waveforms.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "stegowave/audio/spectral.hpp"
#include "stegowave/core/rng.hpp"
#include "stegowave/dataset/corpus.hpp"
#include "stegowave/evaluation/metrics.hpp"
#include "stegowave/pipeline.hpp"
#include "stegowave/training/config.hpp"

namespace stegowave {

struct EvalConfig {
  std::size_t max_pairs = 0;   // 0: one pair per test item
  std::uint64_t seed = 7;      // secret selection and channel noise
  std::size_t batch_size = 8;  // inference batch; does not change results
};

struct PairMetrics {
  std::size_t carrier_id = 0;  // corpus index
  std::size_t secret_id = 0;
  double carrier_mse = 0;
  double secret_mse = 0;
  SnrValue carrier_snr;
  SnrValue secret_snr;
};

struct MetricsReport {
  std::string mode = "fidelity";  // or "robustness"
  std::optional<double> channel_snr_db;
  InitSetting init = InitSetting::ran;
  NoiseSetting noise = NoiseSetting::nor;
  double carrier_mse = 0;
  double secret_mse = 0;
  double carrier_snr_db = 0;  // mean over pairs with finite SNR
  double secret_snr_db = 0;
  std::size_t n_items = 0;
  std::vector<PairMetrics> pairs;

  bool valid() const {
    return n_items >= 1 && carrier_mse >= 0 && secret_mse >= 0 && std::isfinite(carrier_mse) &&
           std::isfinite(secret_mse) && std::isfinite(carrier_snr_db) && std::isfinite(secret_snr_db);
  }
};

/// Evaluation pairs: each test item (in split order) is a carrier; its secret
/// is another test item drawn from a seeded stream.
inline std::vector<std::pair<std::size_t, std::size_t>> evaluation_pairs(const Corpus& corpus, const EvalConfig& cfg) {
  const auto& test = corpus.test_ids;
  if (test.size() < 2) throw Error("evaluation needs at least 2 test items, have " + std::to_string(test.size()));
  const std::size_t n = cfg.max_pairs == 0 ? test.size() : std::min(cfg.max_pairs, test.size());
  Rng rng(derive_seed(cfg.seed, 0x7061697273ull));
  std::vector<std::pair<std::size_t, std::size_t>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto j = static_cast<std::size_t>(rng.below(test.size() - 1));
    if (j >= i) ++j;
    out.emplace_back(test[i], test[j]);
  }
  return out;
}

namespace detail {

inline double mean_finite(const std::vector<PairMetrics>& pairs, SnrValue PairMetrics::*field) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& p : pairs) {
    if ((p.*field).exact) continue;
    sum += (p.*field).db;
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

inline MetricsReport run_transmission(ModelSet<float>& models, const StftEngine& engine, const Corpus& corpus,
                                      std::optional<double> channel_snr_db, const EvalConfig& cfg) {
  const auto pairs = evaluation_pairs(corpus, cfg);
  MetricsReport report;
  report.mode = channel_snr_db ? "robustness" : "fidelity";
  report.channel_snr_db = channel_snr_db;
  report.init = models.config.init;
  Rng noise(derive_seed(cfg.seed, 0x6368616eull));
  const std::size_t bs = std::max<std::size_t>(1, cfg.batch_size);
  const std::size_t plane = 2 * engine.config().plane_size();
  for (std::size_t first = 0; first < pairs.size(); first += bs) {
    const std::size_t count = std::min(bs, pairs.size() - first);
    std::vector<const Waveform*> carriers, secrets;
    for (std::size_t k = 0; k < count; ++k) {
      carriers.push_back(&corpus.waveforms[pairs[first + k].first]);
      secrets.push_back(&corpus.waveforms[pairs[first + k].second]);
    }
    const auto tx = transmit(models, engine, carriers, secrets, channel_snr_db, &noise);
    for (std::size_t k = 0; k < count; ++k) {
      PairMetrics m;
      m.carrier_id = pairs[first + k].first;
      m.secret_id = pairs[first + k].second;
      m.carrier_mse = mse({tx.carrier_spec.sample(k), plane}, {tx.received_spec.sample(k), plane});
      m.secret_mse = mse({tx.secret_spec.sample(k), plane}, {tx.revealed_spec.sample(k), plane});
      m.carrier_snr = snr_db(*carriers[k], tx.stego_audio[k]);
      m.secret_snr = snr_db(*secrets[k], tx.revealed_audio[k]);
      report.pairs.push_back(m);
    }
  }
  report.n_items = report.pairs.size();
  for (const auto& p : report.pairs) {
    report.carrier_mse += p.carrier_mse;
    report.secret_mse += p.secret_mse;
  }
  report.carrier_mse /= static_cast<double>(report.n_items);
  report.secret_mse /= static_cast<double>(report.n_items);
  report.carrier_snr_db = mean_finite(report.pairs, &PairMetrics::carrier_snr);
  report.secret_snr_db = mean_finite(report.pairs, &PairMetrics::secret_snr);
  return report;
}

}  // namespace detail

inline MetricsReport evaluate_fidelity(ModelSet<float>& models, const StftEngine& engine, const Corpus& corpus,
                                       const EvalConfig& cfg = {}) {
  return detail::run_transmission(models, engine, corpus, std::nullopt, cfg);
}

/// As evaluate_fidelity with white Gaussian noise at `snr_db` added to the
/// stego audio before the receiver.
inline MetricsReport evaluate_robustness(ModelSet<float>& models, const StftEngine& engine, const Corpus& corpus,
                                         double snr_db, const EvalConfig& cfg = {}) {
  return detail::run_transmission(models, engine, corpus, snr_db, cfg);
}

}  // namespace stegowave
