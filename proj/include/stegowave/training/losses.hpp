#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "stegowave/core/error.hpp"
#include "stegowave/nn/tensor.hpp"
#include "stegowave/training/config.hpp"

namespace stegowave {

inline constexpr double kProbabilityEpsilon = 1e-7;

/// Binary cross-entropy of the predicted stego probability `p` against
/// `label` (0 carrier, 1 stego), with p clamped to [eps, 1 - eps].
template <typename T>
T loss_steganalyzer(T p, int label) {
  const T eps = static_cast<T>(kProbabilityEpsilon);
  const T pc = std::clamp(p, eps, T(1) - eps);
  return label != 0 ? -std::log(pc) : -std::log(T(1) - pc);
}

/// d loss_steganalyzer / dp; zero where the clamp is active.
template <typename T>
T loss_steganalyzer_grad(T p, int label) {
  const T eps = static_cast<T>(kProbabilityEpsilon);
  if (p < eps || p > T(1) - eps) return T(0);
  return label != 0 ? -T(1) / p : T(1) / (T(1) - p);
}

/// Batch-mean cross-entropy over softmax scores (N, 2, 1, 1); channel 1 is
/// the stego probability. Writes dL/dscores into `grad` when non-null.
template <typename T>
T loss_steganalyzer(const nn::Tensor<T>& scores, std::span<const int> labels, nn::Tensor<T>* grad = nullptr) {
  if (scores.c() != 2 || scores.n() != labels.size()) throw ShapeError("loss_steganalyzer: scores/labels mismatch");
  const T inv_n = T(1) / static_cast<T>(scores.n());
  if (grad != nullptr) *grad = nn::Tensor<T>(scores.n(), 2, 1, 1);
  T total = T(0);
  for (std::size_t i = 0; i < scores.n(); ++i) {
    const T p = scores[i * 2 + 1];
    total += loss_steganalyzer(p, labels[i]);
    if (grad != nullptr) (*grad)[i * 2 + 1] = loss_steganalyzer_grad(p, labels[i]) * inv_n;
  }
  return total * inv_n;
}

/// Mean squared error; writes d/da into `grad_a` when non-null.
template <typename T>
T mean_squared_error(const nn::Tensor<T>& a, const nn::Tensor<T>& b, nn::Tensor<T>* grad_a = nullptr) {
  if (!a.same_shape(b)) throw ShapeError("mse: shape mismatch " + a.shape_string() + " vs " + b.shape_string());
  if (a.size() == 0) throw ShapeError("mse: empty tensors");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  if (grad_a != nullptr) {
    *grad_a = nn::Tensor<T>(a.n(), a.c(), a.h(), a.w());
    const T k = T(2) / static_cast<T>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) (*grad_a)[i] = k * (a[i] - b[i]);
  }
  return static_cast<T>(acc / static_cast<double>(a.size()));
}

/// Reveal loss: mean squared error between revealed and true secret spectrograms.
template <typename T>
T loss_decoder(const nn::Tensor<T>& revealed, const nn::Tensor<T>& secret, nn::Tensor<T>* grad = nullptr) {
  return mean_squared_error(revealed, secret, grad);
}

/// Weighted encoder objective. `adversarial` is the generator-side
/// cross-entropy of the steganalyzer labelling stego as carrier.
inline double loss_encoder(double carrier_distance, double adversarial, double reveal, const TrainConfig& cfg) {
  return cfg.lambda_a * carrier_distance + cfg.lambda_b * adversarial + cfg.lambda_c * reveal;
}

}  // namespace stegowave
