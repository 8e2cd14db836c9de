#pragma once

// Layers with hand-written backward passes. Forward functions cache what
// their backward needs; backward accumulates into parameter gradients.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stegowave/core/rng.hpp"
#include "stegowave/nn/tensor.hpp"

namespace stegowave::nn {

enum class Mode {
  train,         ///< batch statistics, running statistics updated
  train_frozen,  ///< batch statistics, running statistics left untouched
  inference,     ///< running statistics, nothing cached for backward
};

struct BackwardFlags {
  bool input = true;   ///< compute the gradient wrt the layer input
  bool params = true;  ///< accumulate parameter gradients
};

template <typename T>
struct Param {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<T> value;
  std::vector<T> grad;

  Param() = default;
  Param(std::string n, std::vector<std::size_t> s) : name(std::move(n)), shape(std::move(s)) {
    std::size_t count = 1;
    for (auto d : shape) count *= d;
    value.assign(count, T(0));
    grad.assign(count, T(0));
  }
  std::size_t size() const { return value.size(); }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

/// Non-trainable state saved with the model (batch-norm running statistics).
template <typename T>
struct Buffer {
  std::string name;
  std::vector<T> value;
};

template <typename T>
using ParamList = std::vector<Param<T>*>;
template <typename T>
using BufferList = std::vector<Buffer<T>*>;

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using ArrMap = Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>;
template <typename T>
using ConstArrMap = Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>;

/// Normal(0, std) initialization.
template <typename T>
void fill_normal(std::vector<T>& v, Rng& rng, double std) {
  for (auto& x : v) x = static_cast<T>(rng.normal() * std);
}

/// Stride-1 2-D convolution with symmetric zero padding, via im2col + GEMM.
template <typename T>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(const std::string& name, std::size_t in, std::size_t out, std::size_t kernel, std::size_t pad)
      : in_(in), out_(out), k_(kernel), pad_(pad),
        weight_(name + ".weight", {out, in, kernel, kernel}),
        bias_(name + ".bias", {out}) {}

  std::size_t in_channels() const { return in_; }
  std::size_t out_channels() const { return out_; }
  std::size_t kernel() const { return k_; }
  std::size_t fan_in() const { return in_ * k_ * k_; }
  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }
  const Param<T>& weight() const { return weight_; }

  /// Normal init with std = gain / sqrt(fan_in); bias zero.
  void init(Rng& rng, double gain) {
    fill_normal(weight_.value, rng, gain / std::sqrt(static_cast<double>(fan_in())));
    std::fill(bias_.value.begin(), bias_.value.end(), T(0));
  }

  std::size_t out_h(std::size_t h) const { return h + 2 * pad_ - k_ + 1; }
  std::size_t out_w(std::size_t w) const { return w + 2 * pad_ - k_ + 1; }

  Tensor<T> forward(const Tensor<T>& x) const {
    if (x.c() != in_) {
      throw ShapeError(weight_.name + ": expected " + std::to_string(in_) + " input channels, got " + x.shape_string());
    }
    if (x.h() + 2 * pad_ < k_ || x.w() + 2 * pad_ < k_) throw ShapeError(weight_.name + ": input smaller than kernel");
    Tensor<T> y(x.n(), out_, out_h(x.h()), out_w(x.w()));
    correlate(x, weight_.value, out_, pad_, y);
    const std::size_t hw = y.plane();
    for (std::size_t i = 0; i < x.n(); ++i) {
      for (std::size_t o = 0; o < out_; ++o) {
        T* row = y.channel(i, o);
        const T b = bias_.value[o];
        for (std::size_t p = 0; p < hw; ++p) row[p] += b;
      }
    }
    return y;
  }

  /// Returns dL/dx (empty when flags.input is false). The input gradient is
  /// the full correlation of gy with the spatially flipped, transposed kernel.
  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& gy, BackwardFlags flags = {}) {
    const std::size_t oh = out_h(x.h()), ow = out_w(x.w()), hw = oh * ow;
    if (gy.n() != x.n() || gy.c() != out_ || gy.h() != oh || gy.w() != ow) {
      throw ShapeError(weight_.name + ": gradient shape " + gy.shape_string() + " does not match output");
    }
    Tensor<T> gx;
    if (flags.input) {
      gx = Tensor<T>(x.n(), in_, x.h(), x.w());
      correlate(gy, flipped_weight(), in_, k_ - 1 - pad_, gx);
    }
    if (!flags.params) return gx;
    const auto rows = static_cast<Eigen::Index>(out_);
    const auto cols = static_cast<Eigen::Index>(fan_in());
    MatMap<T> gw(weight_.grad.data(), rows, cols);
    const std::size_t chunk = chunk_rows(fan_in(), ow);
    for (std::size_t i = 0; i < x.n(); ++i) {
      ConstMatMap<T> gyi(gy.sample(i), rows, static_cast<Eigen::Index>(hw));
      for (std::size_t o = 0; o < out_; ++o) {
        const T* row = gyi.data() + o * hw;
        T acc = T(0);
        for (std::size_t p = 0; p < hw; ++p) acc += row[p];
        bias_.grad[o] += acc;
      }
      if (pointwise()) {
        ConstMatMap<T> xi(x.sample(i), static_cast<Eigen::Index>(in_), static_cast<Eigen::Index>(hw));
        gw.noalias() += gyi * xi.transpose();
        continue;
      }
      for (std::size_t r0 = 0; r0 < oh; r0 += chunk) {
        const std::size_t r1 = std::min(oh, r0 + chunk), n = (r1 - r0) * ow;
        im2col(x, i, k_, pad_, r0, r1, ow);
        ConstMatMap<T> col(col_.data(), cols, static_cast<Eigen::Index>(n));
        gw.noalias() += gyi.middleCols(static_cast<Eigen::Index>(r0 * ow), static_cast<Eigen::Index>(n)) * col.transpose();
      }
    }
    return gx;
  }

  void params(ParamList<T>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

 private:
  bool pointwise() const { return k_ == 1 && pad_ == 0; }

  // Output rows per im2col chunk, sized so the column buffer stays cache resident.
  static std::size_t chunk_rows(std::size_t rows, std::size_t ow) {
    constexpr std::size_t kTargetBytes = 256 * 1024;
    return std::max<std::size_t>(1, kTargetBytes / (sizeof(T) * rows * std::max<std::size_t>(1, ow)));
  }

  // [in][out][ky][kx] with both kernel axes reversed.
  std::vector<T> flipped_weight() const {
    std::vector<T> f(weight_.value.size());
    const std::size_t kk = k_ * k_;
    for (std::size_t o = 0; o < out_; ++o) {
      for (std::size_t c = 0; c < in_; ++c) {
        const T* src = weight_.value.data() + (o * in_ + c) * kk;
        T* dst = f.data() + (c * out_ + o) * kk;
        for (std::size_t j = 0; j < kk; ++j) dst[j] = src[kk - 1 - j];
      }
    }
    return f;
  }

  // y = correlate(x, w) with kernel k_, zero padding `pad`; w is
  // [y channels][x channels][k][k]. y must be preallocated.
  void correlate(const Tensor<T>& x, const std::vector<T>& w, std::size_t out, std::size_t pad, Tensor<T>& y) const {
    const std::size_t cin = x.c(), rows = cin * k_ * k_, oh = y.h(), ow = y.w(), hw = oh * ow;
    ConstMatMap<T> wm(w.data(), static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(rows));
    const std::size_t chunk = chunk_rows(rows, ow);
    for (std::size_t i = 0; i < x.n(); ++i) {
      MatMap<T> yi(y.sample(i), static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(hw));
      if (k_ == 1 && pad == 0) {
        yi.noalias() = wm * ConstMatMap<T>(x.sample(i), static_cast<Eigen::Index>(cin), static_cast<Eigen::Index>(hw));
        continue;
      }
      for (std::size_t r0 = 0; r0 < oh; r0 += chunk) {
        const std::size_t r1 = std::min(oh, r0 + chunk), n = (r1 - r0) * ow;
        im2col(x, i, k_, pad, r0, r1, ow);
        ConstMatMap<T> col(col_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n));
        yi.middleCols(static_cast<Eigen::Index>(r0 * ow), static_cast<Eigen::Index>(n)).noalias() = wm * col;
      }
    }
  }

  // Column matrix of sample i for output rows [r0, r1) of width ow.
  void im2col(const Tensor<T>& x, std::size_t i, std::size_t k, std::size_t pad, std::size_t r0, std::size_t r1,
              std::size_t ow) const {
    const std::size_t h = x.h(), w = x.w(), n = (r1 - r0) * ow;
    col_.resize(x.c() * k * k * n);
    for (std::size_t c = 0; c < x.c(); ++c) {
      const T* src = x.channel(i, c);
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          T* dst = col_.data() + ((c * k + ky) * k + kx) * n;
          // Valid output columns: ox + kx - pad in [0, w).
          const std::size_t lo = std::min(ow, kx < pad ? pad - kx : std::size_t{0});
          const std::size_t hi = std::max(lo, std::min(ow, w + pad > kx ? w + pad - kx : std::size_t{0}));
          for (std::size_t oy = r0; oy < r1; ++oy) {
            T* d = dst + (oy - r0) * ow;
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + ky) - static_cast<std::ptrdiff_t>(pad);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h) || hi == lo) {
              std::fill(d, d + ow, T(0));
              continue;
            }
            std::fill(d, d + lo, T(0));
            const T* s = src + static_cast<std::size_t>(iy) * w + (lo + kx - pad);
            std::copy(s, s + (hi - lo), d + lo);
            std::fill(d + hi, d + ow, T(0));
          }
        }
      }
    }
  }

  std::size_t in_ = 0, out_ = 0, k_ = 1, pad_ = 0;
  Param<T> weight_, bias_;
  mutable std::vector<T> col_;
};

/// Per-channel batch normalization over (N, H, W).
template <typename T>
class BatchNorm2d {
 public:
  BatchNorm2d() = default;
  BatchNorm2d(const std::string& name, std::size_t channels, double momentum = 0.1, double eps = 1e-5)
      : channels_(channels), momentum_(momentum), eps_(eps),
        gamma_(name + ".gamma", {channels}), beta_(name + ".beta", {channels}),
        running_mean_{name + ".running_mean", std::vector<T>(channels, T(0))},
        running_var_{name + ".running_var", std::vector<T>(channels, T(1))} {
    std::fill(gamma_.value.begin(), gamma_.value.end(), T(1));
  }

  Tensor<T> forward(const Tensor<T>& x, Mode mode) {
    if (x.c() != channels_) throw ShapeError(gamma_.name + ": channel mismatch " + x.shape_string());
    Tensor<T> y(x.n(), x.c(), x.h(), x.w());
    const std::size_t hw = x.plane();
    const double count = static_cast<double>(x.n() * hw);
    if (mode == Mode::inference) {
      for (std::size_t c = 0; c < channels_; ++c) {
        const T scale = gamma_.value[c] / static_cast<T>(std::sqrt(static_cast<double>(running_var_.value[c]) + eps_));
        const T shift = beta_.value[c] - running_mean_.value[c] * scale;
        for (std::size_t i = 0; i < x.n(); ++i) {
          const T* src = x.channel(i, c);
          T* dst = y.channel(i, c);
          for (std::size_t p = 0; p < hw; ++p) dst[p] = src[p] * scale + shift;
        }
      }
      xhat_ = Tensor<T>();
      return y;
    }
    xhat_ = Tensor<T>(x.n(), x.c(), x.h(), x.w());
    inv_std_.assign(channels_, T(0));
    const auto n = static_cast<Eigen::Index>(hw);
    for (std::size_t c = 0; c < channels_; ++c) {
      // Per-plane partial sums in T, accumulated across planes in double.
      double sum = 0.0;
      for (std::size_t i = 0; i < x.n(); ++i) sum += static_cast<double>(ConstArrMap<T>(x.channel(i, c), n).sum());
      const double mean = sum / count;
      double sq = 0.0;
      for (std::size_t i = 0; i < x.n(); ++i) {
        sq += static_cast<double>((ConstArrMap<T>(x.channel(i, c), n) - static_cast<T>(mean)).square().sum());
      }
      const double var = sq / count;
      const double inv = 1.0 / std::sqrt(var + eps_);
      inv_std_[c] = static_cast<T>(inv);
      const T g = gamma_.value[c], b = beta_.value[c];
      for (std::size_t i = 0; i < x.n(); ++i) {
        ArrMap<T> xh(xhat_.channel(i, c), n);
        xh = (ConstArrMap<T>(x.channel(i, c), n) - static_cast<T>(mean)) * static_cast<T>(inv);
        ArrMap<T>(y.channel(i, c), n) = xh * g + b;
      }
      if (mode == Mode::train) {
        const double unbiased = count > 1 ? var * count / (count - 1) : var;
        running_mean_.value[c] = static_cast<T>((1 - momentum_) * running_mean_.value[c] + momentum_ * mean);
        running_var_.value[c] = static_cast<T>((1 - momentum_) * running_var_.value[c] + momentum_ * unbiased);
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, BackwardFlags flags = {}) {
    if (xhat_.empty() || !xhat_.same_shape(gy)) throw Error(gamma_.name + ": backward without matching training forward");
    Tensor<T> gx;
    if (flags.input) gx = Tensor<T>(gy.n(), gy.c(), gy.h(), gy.w());
    const auto n = static_cast<Eigen::Index>(gy.plane());
    const double count = static_cast<double>(gy.n() * gy.plane());
    for (std::size_t c = 0; c < channels_; ++c) {
      double sum_g = 0.0, sum_gx = 0.0;
      for (std::size_t i = 0; i < gy.n(); ++i) {
        const ConstArrMap<T> g(gy.channel(i, c), n);
        sum_g += static_cast<double>(g.sum());
        sum_gx += static_cast<double>((g * ConstArrMap<T>(xhat_.channel(i, c), n)).sum());
      }
      if (flags.params) {
        gamma_.grad[c] += static_cast<T>(sum_gx);
        beta_.grad[c] += static_cast<T>(sum_g);
      }
      if (!flags.input) continue;
      const auto k = static_cast<T>(static_cast<double>(gamma_.value[c]) * static_cast<double>(inv_std_[c]));
      const auto mean_g = static_cast<T>(sum_g / count), mean_gx = static_cast<T>(sum_gx / count);
      for (std::size_t i = 0; i < gy.n(); ++i) {
        ArrMap<T>(gx.channel(i, c), n) =
            k * (ConstArrMap<T>(gy.channel(i, c), n) - mean_g - ConstArrMap<T>(xhat_.channel(i, c), n) * mean_gx);
      }
    }
    return gx;
  }

  void params(ParamList<T>& out) {
    out.push_back(&gamma_);
    out.push_back(&beta_);
  }
  void buffers(BufferList<T>& out) {
    out.push_back(&running_mean_);
    out.push_back(&running_var_);
  }

 private:
  std::size_t channels_ = 0;
  double momentum_ = 0.1, eps_ = 1e-5;
  Param<T> gamma_, beta_;
  Buffer<T> running_mean_, running_var_;
  Tensor<T> xhat_;
  std::vector<T> inv_std_;
};

template <typename T>
void relu_inplace(Tensor<T>& x) {
  for (auto& v : x.values()) v = v > T(0) ? v : T(0);
}

/// Gradient of ReLU given its output.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& y, const Tensor<T>& gy) {
  Tensor<T> gx(gy.n(), gy.c(), gy.h(), gy.w());
  for (std::size_t i = 0; i < gy.size(); ++i) gx[i] = y[i] > T(0) ? gy[i] : T(0);
  return gx;
}

/// Fully connected layer on (N, in, 1, 1) tensors.
template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out)
      : in_(in), out_(out), weight_(name + ".weight", {out, in}), bias_(name + ".bias", {out}) {}

  void init(Rng& rng, double gain) {
    fill_normal(weight_.value, rng, gain / std::sqrt(static_cast<double>(in_)));
    std::fill(bias_.value.begin(), bias_.value.end(), T(0));
  }

  Tensor<T> forward(const Tensor<T>& x) const {
    if (x.sample_size() != in_) throw ShapeError(weight_.name + ": input width mismatch " + x.shape_string());
    Tensor<T> y(x.n(), out_, 1, 1);
    ConstMatMap<T> w(weight_.value.data(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(in_));
    ConstMatMap<T> xm(x.data(), static_cast<Eigen::Index>(x.n()), static_cast<Eigen::Index>(in_));
    MatMap<T> ym(y.data(), static_cast<Eigen::Index>(x.n()), static_cast<Eigen::Index>(out_));
    ym.noalias() = xm * w.transpose();
    for (std::size_t i = 0; i < x.n(); ++i) {
      for (std::size_t o = 0; o < out_; ++o) y[i * out_ + o] += bias_.value[o];
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& gy, BackwardFlags flags = {}) {
    const auto n = static_cast<Eigen::Index>(x.n());
    ConstMatMap<T> w(weight_.value.data(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(in_));
    ConstMatMap<T> xm(x.data(), n, static_cast<Eigen::Index>(in_));
    ConstMatMap<T> gm(gy.data(), n, static_cast<Eigen::Index>(out_));
    if (flags.params) {
      MatMap<T> gw(weight_.grad.data(), static_cast<Eigen::Index>(out_), static_cast<Eigen::Index>(in_));
      gw.noalias() += gm.transpose() * xm;
      for (std::size_t i = 0; i < x.n(); ++i) {
        for (std::size_t o = 0; o < out_; ++o) bias_.grad[o] += gy[i * out_ + o];
      }
    }
    Tensor<T> gx;
    if (flags.input) {
      gx = Tensor<T>(x.n(), x.c(), x.h(), x.w());
      MatMap<T> gxm(gx.data(), n, static_cast<Eigen::Index>(in_));
      gxm.noalias() = gm * w;
    }
    return gx;
  }

  void params(ParamList<T>& out) {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

 private:
  std::size_t in_ = 0, out_ = 0;
  Param<T> weight_, bias_;
};

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& x) {
  Tensor<T> y(x.n(), x.c(), 1, 1);
  const std::size_t hw = x.plane();
  for (std::size_t i = 0; i < x.n(); ++i) {
    for (std::size_t c = 0; c < x.c(); ++c) {
      const T* src = x.channel(i, c);
      double acc = 0.0;
      for (std::size_t p = 0; p < hw; ++p) acc += static_cast<double>(src[p]);
      y(i, c, 0, 0) = static_cast<T>(acc / static_cast<double>(hw));
    }
  }
  return y;
}

template <typename T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& gy, std::size_t h, std::size_t w) {
  Tensor<T> gx(gy.n(), gy.c(), h, w);
  const T inv = T(1) / static_cast<T>(h * w);
  for (std::size_t i = 0; i < gy.n(); ++i) {
    for (std::size_t c = 0; c < gy.c(); ++c) {
      std::fill_n(gx.channel(i, c), h * w, gy(i, c, 0, 0) * inv);
    }
  }
  return gx;
}

/// Row-wise softmax of (N, K, 1, 1) logits.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  Tensor<T> p(logits.n(), logits.c(), 1, 1);
  const std::size_t k = logits.c();
  for (std::size_t i = 0; i < logits.n(); ++i) {
    const T* z = logits.sample(i);
    const T m = *std::max_element(z, z + k);
    T sum = T(0);
    for (std::size_t j = 0; j < k; ++j) sum += (p[i * k + j] = std::exp(z[j] - m));
    for (std::size_t j = 0; j < k; ++j) p[i * k + j] /= sum;
  }
  return p;
}

/// Vector-Jacobian product of softmax given its output probabilities.
template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& probs, const Tensor<T>& gp) {
  Tensor<T> gz(probs.n(), probs.c(), 1, 1);
  const std::size_t k = probs.c();
  for (std::size_t i = 0; i < probs.n(); ++i) {
    T dot = T(0);
    for (std::size_t j = 0; j < k; ++j) dot += probs[i * k + j] * gp[i * k + j];
    for (std::size_t j = 0; j < k; ++j) gz[i * k + j] = probs[i * k + j] * (gp[i * k + j] - dot);
  }
  return gz;
}

}  // namespace stegowave::nn
