#pragma once

// Loss evaluation and gradient accumulation for one batch, shared by the
// trainer (float) and the finite-difference checks (double).

#include <algorithm>
#include <vector>

#include "stegowave/models/model_set.hpp"
#include "stegowave/nn/tensor.hpp"
#include "stegowave/training/config.hpp"
#include "stegowave/training/losses.hpp"

namespace stegowave {

/// Steganalyzer objective on {carrier -> 0, stego -> 1}. Accumulates
/// d L_s / d theta_S when `accumulate` is set.
template <typename T>
double steganalyzer_pass(ModelSet<T>& m, const nn::Tensor<T>& carrier, const nn::Tensor<T>& stego, bool accumulate,
                         Mode mode = Mode::train) {
  const nn::Tensor<T> mixed = nn::concat_batch(carrier, stego);
  std::vector<int> labels(mixed.n(), 0);
  std::fill(labels.begin() + static_cast<std::ptrdiff_t>(carrier.n()), labels.end(), 1);
  const auto probs = nn::softmax(m.steganalyzer.forward(mixed, mode));
  nn::Tensor<T> g;
  const double loss = loss_steganalyzer(probs, labels, accumulate ? &g : nullptr);
  if (accumulate) m.steganalyzer.backward(nn::softmax_backward(probs, g), {false, true});
  return loss;
}

struct GeneratorLosses {
  double encoder = 0;      // L_e
  double decoder = 0;      // L_d
  double carrier_mse = 0;  // stego vs carrier
  double adversarial = 0;  // cross-entropy of the steganalyzer calling stego "carrier"
};

/// Identity channel: the decoder reads the stego spectrogram directly.
struct DirectChannel {
  template <typename T>
  const nn::Tensor<T>& forward(const nn::Tensor<T>& x) const { return x; }
  template <typename T>
  nn::Tensor<T> adjoint(nn::Tensor<T> g) const { return g; }
};

/// Encoder/decoder objectives. With `accumulate`, adds d L_d / d theta_D to
/// the decoder gradients and d L_e / d theta_E to the encoder gradients. The
/// steganalyzer runs with frozen statistics and its parameters receive
/// nothing. `encoded`, when given, is the output of the encoder's latest
/// training-mode forward on this batch, which is then not repeated.
/// `channel` maps stego to what the decoder receives and provides the
/// adjoint of that map.
template <typename T, typename Channel = DirectChannel>
GeneratorLosses generator_pass(ModelSet<T>& m, const nn::Tensor<T>& carrier, const nn::Tensor<T>& secret,
                               const TrainConfig& cfg, bool accumulate, const nn::Tensor<T>* encoded = nullptr,
                               Channel&& channel = {}) {
  GeneratorLosses out;
  const nn::Tensor<T> stego = encoded != nullptr ? *encoded : m.encoder.forward(carrier, secret, Mode::train);
  const nn::Tensor<T> received = channel.forward(stego);
  const nn::Tensor<T> revealed = m.decoder.forward(received, Mode::train);
  nn::Tensor<T> g_revealed, g_fidelity;
  out.decoder = loss_decoder(revealed, secret, accumulate ? &g_revealed : nullptr);
  out.carrier_mse = mean_squared_error(stego, carrier, accumulate ? &g_fidelity : nullptr);

  nn::Tensor<T> g_stego;
  if (accumulate) {
    g_stego = channel.adjoint(m.decoder.backward(g_revealed, {true, true}));
    for (auto& v : g_stego.values()) v *= static_cast<T>(cfg.lambda_c);
    nn::add_inplace(g_stego, g_fidelity, static_cast<T>(cfg.lambda_a));
  }
  // The adversarial term is skipped entirely at zero weight so encoder and
  // decoder dynamics do not depend on the steganalyzer.
  if (cfg.lambda_b != 0.0) {
    const auto probs = nn::softmax(m.steganalyzer.forward(stego, Mode::train_frozen));
    const std::vector<int> as_carrier(stego.n(), 0);
    nn::Tensor<T> g_probs;
    out.adversarial = loss_steganalyzer(probs, as_carrier, accumulate ? &g_probs : nullptr);
    if (accumulate) {
      const auto g_adv = m.steganalyzer.backward(nn::softmax_backward(probs, g_probs), {true, false});
      nn::add_inplace(g_stego, g_adv, static_cast<T>(cfg.lambda_b));
    }
  }
  out.encoder = loss_encoder(out.carrier_mse, out.adversarial, out.decoder, cfg);
  if (accumulate) m.encoder.backward(g_stego);
  return out;
}

}  // namespace stegowave
