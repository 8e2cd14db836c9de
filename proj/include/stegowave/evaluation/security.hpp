#pragma once

// Security against detectors trained after the fact: a carrier/stego corpus
// is built with the trained encoder, split in half by pair, and two
// independent detectors are fit on one half and scored on the other.

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "stegowave/audio/spectral.hpp"
#include "stegowave/core/rng.hpp"
#include "stegowave/dataset/corpus.hpp"
#include "stegowave/evaluation/linear_classifier.hpp"
#include "stegowave/evaluation/srm_features.hpp"
#include "stegowave/nn/adam.hpp"
#include "stegowave/pipeline.hpp"
#include "stegowave/training/losses.hpp"

namespace stegowave {

struct DetectorReport {
  std::string method;  // generator under test, e.g. "stegowave-HPF"
  std::string kind;    // "SRM-linear" or "CNN"
  double accuracy = 0;
  std::size_t n_train = 0;  // samples
  std::size_t n_test = 0;
};

struct SecurityConfig {
  std::size_t n_stego = 5000;
  std::uint64_t seed = 11;
  bool shuffle_labels = false;  // sanity control: detectors see permuted training labels
  SrmFeatureConfig srm;
  LinearClassifierConfig linear;
  std::size_t cnn_epochs = 4;
  std::size_t cnn_batch = 16;
  double cnn_learning_rate = 1e-3;
  bool run_srm = true;
  bool run_cnn = true;
};

/// Stego audio for a list of (carrier, secret) corpus indices, rendered
/// through ISTFT as a receiver would observe it.
inline std::vector<Waveform> render_stego(ModelSet<float>& models, const StftEngine& engine, const Corpus& corpus,
                                          const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                          std::size_t batch = 8) {
  std::vector<Waveform> out;
  out.reserve(pairs.size());
  for (std::size_t first = 0; first < pairs.size(); first += batch) {
    const std::size_t count = std::min(batch, pairs.size() - first);
    std::vector<const Waveform*> c, s;
    for (std::size_t k = 0; k < count; ++k) {
      c.push_back(&corpus.waveforms[pairs[first + k].first]);
      s.push_back(&corpus.waveforms[pairs[first + k].second]);
    }
    const auto stego = models.encoder.forward(analyze_batch(engine, c), analyze_batch(engine, s), Mode::inference);
    for (std::size_t k = 0; k < count; ++k) out.push_back(synthesize_one(engine, stego, k));
  }
  return out;
}

namespace detail {

struct SecuritySample {
  const Waveform* audio;
  int label;  // 1 = stego
};

inline void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[static_cast<std::size_t>(rng.below(i))]);
}

inline double train_cnn_detector(const ModelConfig& model_cfg, const StftEngine& engine,
                                 const std::vector<SecuritySample>& train, const std::vector<int>& train_labels,
                                 const std::vector<SecuritySample>& test, const SecurityConfig& cfg) {
  Steganalyzer<float> net(model_cfg);
  nn::ParamList<float> params;
  net.params(params);
  nn::Adam<float> opt(params, {cfg.cnn_learning_rate, 0.9, 0.999, 1e-8});
  Rng order_rng(derive_seed(cfg.seed, 0x636e6e6full));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t bs = std::max<std::size_t>(2, cfg.cnn_batch);
  for (std::size_t epoch = 0; epoch < cfg.cnn_epochs; ++epoch) {
    shuffle(order, order_rng);
    for (std::size_t first = 0; first + 1 < order.size(); first += bs) {
      const std::size_t count = std::min(bs, order.size() - first);
      if (count < 2) break;  // batch statistics need two samples
      std::vector<const Waveform*> audio;
      std::vector<int> labels;
      for (std::size_t k = 0; k < count; ++k) {
        audio.push_back(train[order[first + k]].audio);
        labels.push_back(train_labels[order[first + k]]);
      }
      opt.zero_grad();
      const auto probs = nn::softmax(net.forward(analyze_batch(engine, audio), Mode::train));
      nn::Tensor<float> g;
      loss_steganalyzer(probs, labels, &g);
      net.backward(nn::softmax_backward(probs, g), {false, true});
      opt.step();
    }
  }
  net.release();
  std::size_t correct = 0;
  for (std::size_t first = 0; first < test.size(); first += bs) {
    const std::size_t count = std::min(bs, test.size() - first);
    std::vector<const Waveform*> audio;
    for (std::size_t k = 0; k < count; ++k) audio.push_back(test[first + k].audio);
    const auto p = net.scores(analyze_batch(engine, audio), Mode::inference);
    for (std::size_t k = 0; k < count; ++k) correct += (p[k * 2 + 1] >= 0.5f ? 1 : 0) == test[first + k].label;
  }
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

}  // namespace detail

inline std::vector<DetectorReport> security_eval(ModelSet<float>& models, const StftEngine& engine,
                                                 const Corpus& corpus, const SecurityConfig& cfg = {},
                                                 const std::string& method = "stegowave") {
  if (cfg.n_stego < 2) throw Error("security evaluation needs n_stego >= 2");
  if (corpus.size() < 2 || cfg.n_stego > corpus.size()) {
    throw Error("insufficient corpus for security evaluation: n_stego " + std::to_string(cfg.n_stego) +
                " but corpus has " + std::to_string(corpus.size()) + " items");
  }
  // Carriers: test items first, then training items.
  std::vector<std::size_t> pool = corpus.test_ids;
  pool.insert(pool.end(), corpus.train_ids.begin(), corpus.train_ids.end());
  if (pool.size() < corpus.size()) {
    pool.clear();
    for (std::size_t i = 0; i < corpus.size(); ++i) pool.push_back(i);
  }
  Rng rng(derive_seed(cfg.seed, 0x7365637572ull));
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < cfg.n_stego; ++i) {
    auto j = static_cast<std::size_t>(rng.below(pool.size() - 1));
    if (j >= i) ++j;
    pairs.emplace_back(pool[i], pool[j]);
  }
  const auto stego = render_stego(models, engine, corpus, pairs);

  // Half of the pairs train the detectors; a pair's carrier and stego stay together.
  std::vector<std::size_t> pair_order(pairs.size());
  std::iota(pair_order.begin(), pair_order.end(), 0);
  detail::shuffle(pair_order, rng);
  const std::size_t n_train_pairs = pairs.size() / 2;
  std::vector<detail::SecuritySample> train, test;
  for (std::size_t k = 0; k < pair_order.size(); ++k) {
    const std::size_t p = pair_order[k];
    auto& dst = k < n_train_pairs ? train : test;
    dst.push_back({&corpus.waveforms[pairs[p].first], 0});
    dst.push_back({&stego[p], 1});
  }
  std::vector<int> train_labels, test_labels;
  for (const auto& s : train) train_labels.push_back(s.label);
  for (const auto& s : test) test_labels.push_back(s.label);
  if (cfg.shuffle_labels) {
    Rng label_rng(derive_seed(cfg.seed, 0x6c61626cull));
    for (std::size_t i = train_labels.size(); i > 1; --i) {
      std::swap(train_labels[i - 1], train_labels[static_cast<std::size_t>(label_rng.below(i))]);
    }
  }

  std::vector<DetectorReport> reports;
  if (cfg.run_srm) {
    const std::size_t dim = cfg.srm.dimension();
    auto features = [&](const std::vector<detail::SecuritySample>& set) {
      LogisticRegression::Matrix x(static_cast<Eigen::Index>(set.size()), static_cast<Eigen::Index>(dim));
      std::vector<float> spec(2 * engine.config().plane_size());
      for (std::size_t i = 0; i < set.size(); ++i) {
        engine.analyze(set[i].audio->samples, spec);
        const auto f = srm_features(spec, engine.bins(), engine.frames(), cfg.srm);
        for (std::size_t j = 0; j < dim; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f[j];
      }
      return x;
    };
    LogisticRegression clf;
    clf.fit(features(train), train_labels, cfg.linear);
    reports.push_back({method, "SRM-linear", clf.accuracy(features(test), test_labels), train.size(), test.size()});
  }
  if (cfg.run_cnn) {
    ModelConfig detector = models.config;
    detector.init = InitSetting::hpf;
    detector.seed = derive_seed(cfg.seed, 0x646574ull);
    const double acc = detail::train_cnn_detector(detector, engine, train, train_labels, test, cfg);
    reports.push_back({method, "CNN", acc, train.size(), test.size()});
  }
  return reports;
}

}  // namespace stegowave
