#pragma once

// Encoder, decoder and steganalyzer. Channel widths follow the reference
// layer table; `width_divisor` scales every convolutional width down for
// desk-scale runs (1 = full width).

#include <algorithm>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "stegowave/core/error.hpp"
#include "stegowave/core/rng.hpp"
#include "stegowave/models/blocks.hpp"
#include "stegowave/models/srm.hpp"

namespace stegowave {

enum class InitSetting { ran, hpf };

inline std::string to_string(InitSetting s) { return s == InitSetting::ran ? "RAN" : "HPF"; }

struct ModelConfig {
  std::size_t width_divisor = 1;
  std::size_t hpf_filters = 8;  // first steganalyzer layer, 5x5 valid
  std::size_t fc1 = 512;
  std::size_t fc2 = 256;
  K3Variant k3_variant = K3Variant::corrected;
  InitSetting init = InitSetting::ran;
  std::uint64_t seed = 1;

  std::size_t width(std::size_t n) const { return std::max<std::size_t>(1, n / std::max<std::size_t>(1, width_divisor)); }

  void validate() const {
    if (width_divisor == 0) throw ConfigError("width_divisor must be >= 1");
    if (hpf_filters == 0 || fc1 == 0 || fc2 == 0) throw ConfigError("steganalyzer widths must be >= 1");
  }
};

// Reference widths.
inline constexpr std::size_t kEncoderStem = 16;
inline constexpr std::size_t kEncoderInception[] = {32, 64, 128, 64, 32};
inline constexpr std::size_t kEncoderTail[] = {32, 16, 16};
inline constexpr std::size_t kDecoderWidths[] = {16, 32, 64, 128, 64, 32};
inline constexpr std::size_t kSteganalyzerWidths[] = {16, 32, 64};
inline constexpr std::size_t kSpectrogramChannels = 2;

/// Blocks followed by a linear 3x3 output head producing `out` channels.
template <typename T>
class BlockChain {
 public:
  BlockChain() = default;

  void add(std::unique_ptr<Block<T>> block) { blocks_.push_back(std::move(block)); }
  void set_head(const std::string& name, std::size_t in, std::size_t out) { head_ = nn::Conv2d<T>(name, in, out, 3, 1); }

  void init(Rng& rng) {
    for (auto& b : blocks_) b->init(rng);
    head_.init(rng, 1.0);
  }

  Tensor<T> forward(Tensor<T> x, Mode mode) {
    acts_.clear();
    if (mode != Mode::inference) acts_.push_back(x);
    for (auto& b : blocks_) {
      x = b->forward(x, mode);
      if (mode != Mode::inference) acts_.push_back(x);
    }
    return head_.forward(x);
  }

  Tensor<T> backward(const Tensor<T>& gy, BackwardFlags flags) {
    if (acts_.size() != blocks_.size() + 1) throw Error("backward called without a training-mode forward");
    Tensor<T> g = head_.backward(acts_.back(), gy, {true, flags.params});
    for (std::size_t i = blocks_.size(); i-- > 0;) {
      g = blocks_[i]->backward(acts_[i], acts_[i + 1], g, {i > 0 || flags.input, flags.params});
    }
    return g;
  }

  void params(nn::ParamList<T>& out) {
    for (auto& b : blocks_) b->params(out);
    head_.params(out);
  }
  void buffers(nn::BufferList<T>& out) {
    for (auto& b : blocks_) b->buffers(out);
  }
  void release() { acts_.clear(); }

 private:
  std::vector<std::unique_ptr<Block<T>>> blocks_;
  nn::Conv2d<T> head_;
  std::vector<Tensor<T>> acts_;
};

/// (carrier, secret) spectrograms -> stego spectrogram, same spatial size.
template <typename T>
class Encoder {
 public:
  explicit Encoder(const ModelConfig& cfg) {
    std::size_t in = 2 * kSpectrogramChannels;
    chain_.add(std::make_unique<ConvBlock<T>>("encoder.stem", in, cfg.width(kEncoderStem)));
    in = cfg.width(kEncoderStem);
    std::size_t idx = 0;
    for (auto w : kEncoderInception) {
      chain_.add(std::make_unique<InceptionBlock<T>>("encoder.inception" + std::to_string(idx++), in, cfg.width(w)));
      in = cfg.width(w);
    }
    idx = 0;
    for (auto w : kEncoderTail) {
      chain_.add(std::make_unique<ConvBlock<T>>("encoder.tail" + std::to_string(idx++), in, cfg.width(w)));
      in = cfg.width(w);
    }
    chain_.set_head("encoder.head", in, kSpectrogramChannels);
    Rng rng(derive_seed(cfg.seed, 101));
    chain_.init(rng);
  }

  Tensor<T> forward(const Tensor<T>& carrier, const Tensor<T>& secret, Mode mode) {
    check_input(carrier, "carrier");
    check_input(secret, "secret");
    if (!carrier.same_shape(secret)) throw ShapeError("encoder: carrier/secret shape mismatch");
    Tensor<T> y = chain_.forward(nn::concat_channels(carrier, secret), mode);
    if (!y.all_finite()) throw NumericError("encoder produced non-finite activations");
    return y;
  }

  /// Accumulates parameter gradients; returns dL/d(carrier ++ secret) when requested.
  Tensor<T> backward(const Tensor<T>& gy, BackwardFlags flags = {false, true}) { return chain_.backward(gy, flags); }

  void params(nn::ParamList<T>& out) { chain_.params(out); }
  void buffers(nn::BufferList<T>& out) { chain_.buffers(out); }
  void release() { chain_.release(); }

 private:
  static void check_input(const Tensor<T>& x, const char* what) {
    if (x.c() != kSpectrogramChannels) {
      throw ShapeError(std::string("encoder: ") + what + " must have 2 channels, got " + x.shape_string());
    }
  }
  BlockChain<T> chain_;
};

/// Stego spectrogram -> revealed secret spectrogram.
template <typename T>
class Decoder {
 public:
  explicit Decoder(const ModelConfig& cfg) {
    std::size_t in = kSpectrogramChannels;
    std::size_t idx = 0;
    for (auto w : kDecoderWidths) {
      chain_.add(std::make_unique<ConvBlock<T>>("decoder.block" + std::to_string(idx++), in, cfg.width(w)));
      in = cfg.width(w);
    }
    chain_.set_head("decoder.head", in, kSpectrogramChannels);
    Rng rng(derive_seed(cfg.seed, 102));
    chain_.init(rng);
  }

  Tensor<T> forward(const Tensor<T>& stego, Mode mode) {
    if (stego.c() != kSpectrogramChannels) throw ShapeError("decoder: input must have 2 channels, got " + stego.shape_string());
    Tensor<T> y = chain_.forward(stego, mode);
    if (!y.all_finite()) throw NumericError("decoder produced non-finite activations");
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, BackwardFlags flags = {}) { return chain_.backward(gy, flags); }

  void params(nn::ParamList<T>& out) { chain_.params(out); }
  void buffers(nn::BufferList<T>& out) { chain_.buffers(out); }
  void release() { chain_.release(); }

 private:
  BlockChain<T> chain_;
};

/// Shallow, wide detector: high-pass first layer, three ConvBlocks, global
/// average pooling and three fully connected layers. forward() returns
/// logits; class 1 is "stego".
template <typename T>
class Steganalyzer {
 public:
  explicit Steganalyzer(const ModelConfig& cfg)
      : hpf_("steganalyzer.hpf", kSpectrogramChannels, cfg.hpf_filters, 5, 0),
        fc1_("steganalyzer.fc1", cfg.width(kSteganalyzerWidths[2]), cfg.fc1),
        fc2_("steganalyzer.fc2", cfg.fc1, cfg.fc2),
        fc3_("steganalyzer.fc3", cfg.fc2, 2) {
    std::size_t in = cfg.hpf_filters;
    std::size_t idx = 0;
    for (auto w : kSteganalyzerWidths) {
      blocks_.push_back(std::make_unique<ConvBlock<T>>("steganalyzer.block" + std::to_string(idx++), in, cfg.width(w)));
      in = cfg.width(w);
    }
    Rng rng(derive_seed(cfg.seed, 103));
    hpf_.init(rng, 1.0);
    if (cfg.init == InitSetting::hpf) install_hpf(build_srm_kernels(cfg.k3_variant));
    for (auto& b : blocks_) b->init(rng);
    fc1_.init(rng, std::sqrt(2.0));
    fc2_.init(rng, std::sqrt(2.0));
    fc3_.init(rng, 1.0);
  }

  /// Number of leading first-layer filters holding K3/K5 under HPF init.
  std::size_t hpf_initialized_filters() const { return hpf_initialized_; }

  Tensor<T> first_layer(const Tensor<T>& x) const { return hpf_.forward(x); }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    if (x.c() != kSpectrogramChannels) throw ShapeError("steganalyzer: input must have 2 channels, got " + x.shape_string());
    const bool cache = mode != Mode::inference;
    acts_.clear();
    Tensor<T> h = hpf_.forward(x);
    if (cache) {
      input_ = x;
      acts_.push_back(h);
    }
    for (auto& b : blocks_) {
      h = b->forward(h, mode);
      if (cache) acts_.push_back(h);
    }
    Tensor<T> pooled = nn::global_avg_pool(h);
    Tensor<T> f1 = fc1_.forward(pooled);
    nn::relu_inplace(f1);
    Tensor<T> f2 = fc2_.forward(f1);
    nn::relu_inplace(f2);
    Tensor<T> logits = fc3_.forward(f2);
    if (cache) {
      pooled_ = std::move(pooled);
      f1_ = std::move(f1);
      f2_ = std::move(f2);
    }
    if (!logits.all_finite()) throw NumericError("steganalyzer produced non-finite logits");
    return logits;
  }

  /// Softmax class scores (N, 2, 1, 1).
  Tensor<T> scores(const Tensor<T>& x, Mode mode = Mode::inference) { return nn::softmax(forward(x, mode)); }

  Tensor<T> backward(const Tensor<T>& g_logits, BackwardFlags flags = {}) {
    if (acts_.size() != blocks_.size() + 1) throw Error("steganalyzer backward without a training-mode forward");
    const BackwardFlags inner{true, flags.params};
    Tensor<T> g = fc3_.backward(f2_, g_logits, inner);
    g = fc2_.backward(f1_, nn::relu_backward(f2_, g), inner);
    g = fc1_.backward(pooled_, nn::relu_backward(f1_, g), inner);
    const Tensor<T>& last = acts_.back();
    g = nn::global_avg_pool_backward(g, last.h(), last.w());
    for (std::size_t i = blocks_.size(); i-- > 0;) g = blocks_[i]->backward(acts_[i], acts_[i + 1], g, inner);
    return hpf_.backward(input_, g, flags);
  }

  void params(nn::ParamList<T>& out) {
    hpf_.params(out);
    for (auto& b : blocks_) b->params(out);
    fc1_.params(out);
    fc2_.params(out);
    fc3_.params(out);
  }
  void buffers(nn::BufferList<T>& out) {
    for (auto& b : blocks_) b->buffers(out);
  }
  void release() {
    acts_.clear();
    input_ = pooled_ = f1_ = f2_ = Tensor<T>();
  }

 private:
  // Filters cycle (K3, K5) over input channels: f0 = K3 on ch0, f1 = K5 on
  // ch0, f2 = K3 on ch1, f3 = K5 on ch1. Remaining filters keep their random
  // init. Biases of the high-pass filters are zero.
  void install_hpf(const SrmKernels& k) {
    const auto k3 = k.k3_padded5();
    const auto k5 = k.k5_values();
    auto& w = hpf_.weight().value;
    const std::size_t per_filter = kSpectrogramChannels * 25;
    hpf_initialized_ = std::min<std::size_t>(hpf_.out_channels(), 2 * kSpectrogramChannels);
    for (std::size_t f = 0; f < hpf_initialized_; ++f) {
      const std::size_t ch = f / 2;
      const auto& kernel = (f % 2 == 0) ? k3 : k5;
      std::fill_n(w.begin() + static_cast<std::ptrdiff_t>(f * per_filter), per_filter, T(0));
      for (std::size_t i = 0; i < 25; ++i) w[f * per_filter + ch * 25 + i] = static_cast<T>(kernel[i]);
      hpf_.bias().value[f] = T(0);
    }
  }

  nn::Conv2d<T> hpf_;
  std::vector<std::unique_ptr<Block<T>>> blocks_;
  nn::Linear<T> fc1_, fc2_, fc3_;
  std::size_t hpf_initialized_ = 0;
  Tensor<T> input_, pooled_, f1_, f2_;
  std::vector<Tensor<T>> acts_;
};

template <typename T>
std::size_t parameter_count(nn::ParamList<T> params) {
  std::size_t n = 0;
  for (auto* p : params) n += p->size();
  return n;
}

template <template <typename> class Net, typename T>
std::size_t parameter_count(Net<T>& net) {
  nn::ParamList<T> params;
  net.params(params);
  return parameter_count(params);
}

}  // namespace stegowave
