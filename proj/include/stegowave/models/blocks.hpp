#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "stegowave/nn/layers.hpp"

namespace stegowave {

using nn::BackwardFlags;
using nn::Mode;
using nn::Tensor;

/// Shape-preserving network stage. backward() receives the stage input and
/// output of the most recent non-inference forward.
template <typename T>
class Block {
 public:
  virtual ~Block() = default;
  virtual Tensor<T> forward(const Tensor<T>& x, Mode mode) = 0;
  virtual Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& gy, BackwardFlags flags) = 0;
  virtual void params(nn::ParamList<T>& out) = 0;
  virtual void buffers(nn::BufferList<T>& out) = 0;
  virtual void init(Rng& rng) = 0;
  virtual std::size_t out_channels() const = 0;
};

/// n x k x k convolution (same padding) + batch norm + ReLU.
template <typename T>
class ConvBlock final : public Block<T> {
 public:
  ConvBlock(const std::string& name, std::size_t in, std::size_t out, std::size_t kernel = 3)
      : conv_(name + ".conv", in, out, kernel, kernel / 2), bn_(name + ".bn", out) {}

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
    Tensor<T> y = bn_.forward(conv_.forward(x), mode);
    nn::relu_inplace(y);
    return y;
  }

  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& gy, BackwardFlags flags) override {
    const Tensor<T> g = bn_.backward(nn::relu_backward(y, gy), {true, flags.params});
    return conv_.backward(x, g, flags);
  }

  void params(nn::ParamList<T>& out) override {
    conv_.params(out);
    bn_.params(out);
  }
  void buffers(nn::BufferList<T>& out) override { bn_.buffers(out); }
  void init(Rng& rng) override { conv_.init(rng, std::sqrt(2.0)); }
  std::size_t out_channels() const override { return conv_.out_channels(); }

 private:
  nn::Conv2d<T> conv_;
  nn::BatchNorm2d<T> bn_;
};

/// Parallel 1x1, 3x3 and 5x5 ConvBlock branches of n channels each,
/// concatenated and fused to n channels by a 1x1 ConvBlock.
template <typename T>
class InceptionBlock final : public Block<T> {
 public:
  InceptionBlock(const std::string& name, std::size_t in, std::size_t out)
      : out_(out),
        b1_(name + ".b1", in, out, 1),
        b3_(name + ".b3", in, out, 3),
        b5_(name + ".b5", in, out, 5),
        fuse_(name + ".fuse", 3 * out, out, 1) {}

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override {
    Tensor<T> cat(x.n(), 3 * out_, x.h(), x.w());
    std::size_t offset = 0;
    for (auto* branch : {&b1_, &b3_, &b5_}) {
      const Tensor<T> y = branch->forward(x, mode);
      for (std::size_t i = 0; i < x.n(); ++i) std::copy_n(y.sample(i), y.sample_size(), cat.channel(i, offset));
      offset += out_;
    }
    Tensor<T> y = fuse_.forward(cat, mode);
    cat_ = mode == Mode::inference ? Tensor<T>() : std::move(cat);
    return y;
  }

  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& gy, BackwardFlags flags) override {
    const Tensor<T> gcat = fuse_.backward(cat_, y, gy, {true, flags.params});
    Tensor<T> gx;
    std::size_t offset = 0;
    for (auto* branch : {&b1_, &b3_, &b5_}) {
      const Tensor<T> g = branch->backward(x, nn::slice_channels(cat_, offset, out_),
                                           nn::slice_channels(gcat, offset, out_), flags);
      offset += out_;
      if (!flags.input) continue;
      if (gx.empty()) {
        gx = g;
      } else {
        nn::add_inplace(gx, g);
      }
    }
    return gx;
  }

  void params(nn::ParamList<T>& out) override {
    b1_.params(out);
    b3_.params(out);
    b5_.params(out);
    fuse_.params(out);
  }
  void buffers(nn::BufferList<T>& out) override {
    b1_.buffers(out);
    b3_.buffers(out);
    b5_.buffers(out);
    fuse_.buffers(out);
  }
  void init(Rng& rng) override {
    b1_.init(rng);
    b3_.init(rng);
    b5_.init(rng);
    fuse_.init(rng);
  }
  std::size_t out_channels() const override { return out_; }

 private:
  std::size_t out_;
  ConvBlock<T> b1_, b3_, b5_, fuse_;
  Tensor<T> cat_;
};

}  // namespace stegowave
