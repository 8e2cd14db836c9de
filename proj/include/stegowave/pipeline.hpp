#pragma once

// Inference paths shared by evaluation and the CLI: sender (embed), channel,
// receiver (extract) and monitor (detect).

#include <optional>
#include <span>
#include <vector>

#include "stegowave/audio/spectral.hpp"
#include "stegowave/core/rng.hpp"
#include "stegowave/models/model_set.hpp"
#include "stegowave/nn/tensor.hpp"
#include "stegowave/training/noise.hpp"

namespace stegowave {

/// Stacks spectrograms into an (N, 2, bins, frames) batch.
inline nn::Tensor<float> to_batch(std::span<const Spectrogram> specs) {
  if (specs.empty()) throw ShapeError("to_batch: empty batch");
  const auto& first = specs.front();
  nn::Tensor<float> out(specs.size(), 2, first.bins, first.frames);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].bins != first.bins || specs[i].frames != first.frames) throw ShapeError("to_batch: mixed shapes");
    std::copy(specs[i].data.begin(), specs[i].data.end(), out.sample(i));
  }
  return out;
}

inline Spectrogram from_batch(const nn::Tensor<float>& batch, std::size_t i, const SpectralConfig& cfg) {
  Spectrogram s(batch.h(), batch.w(), cfg);
  std::copy_n(batch.sample(i), batch.sample_size(), s.data.begin());
  return s;
}

/// STFT of each waveform into one batch tensor.
inline nn::Tensor<float> analyze_batch(const StftEngine& engine, std::span<const Waveform* const> waves) {
  nn::Tensor<float> out(waves.size(), 2, engine.bins(), engine.frames());
  for (std::size_t i = 0; i < waves.size(); ++i) {
    if (waves[i]->length() != engine.length()) {
      throw ShapeError("audio has " + std::to_string(waves[i]->length()) + " samples, expected " +
                       std::to_string(engine.length()));
    }
    engine.analyze(waves[i]->samples, {out.sample(i), out.sample_size()});
  }
  return out;
}

inline Waveform synthesize_one(const StftEngine& engine, const nn::Tensor<float>& batch, std::size_t i) {
  Waveform w;
  w.sample_rate = engine.config().sample_rate;
  w.samples.resize(engine.length());
  engine.synthesize({batch.sample(i), batch.sample_size()}, w.samples);
  return w;
}

inline void check_canonical(const Spectrogram& s, const StftEngine& engine, const char* what) {
  if (s.bins != engine.bins() || s.frames != engine.frames()) {
    throw ShapeError(std::string(what) + ": spectrogram shape (2, " + std::to_string(s.bins) + ", " +
                     std::to_string(s.frames) + "), expected (2, " + std::to_string(engine.bins()) + ", " +
                     std::to_string(engine.frames()) + ")");
  }
}

/// Encoder in inference mode on canonical spectrograms.
inline Spectrogram encoder_forward(ModelSet<float>& m, const StftEngine& engine, const Spectrogram& carrier,
                                   const Spectrogram& secret) {
  check_canonical(carrier, engine, "encoder carrier");
  check_canonical(secret, engine, "encoder secret");
  const auto c = to_batch(std::span(&carrier, 1));
  const auto s = to_batch(std::span(&secret, 1));
  return from_batch(m.encoder.forward(c, s, Mode::inference), 0, engine.config());
}

inline Spectrogram decoder_forward(ModelSet<float>& m, const StftEngine& engine, const Spectrogram& stego) {
  check_canonical(stego, engine, "decoder input");
  return from_batch(m.decoder.forward(to_batch(std::span(&stego, 1)), Mode::inference), 0, engine.config());
}

/// Softmax (carrier, stego) scores.
inline std::pair<double, double> steganalyzer_forward(ModelSet<float>& m, const StftEngine& engine,
                                                      const Spectrogram& spec) {
  check_canonical(spec, engine, "steganalyzer input");
  const auto p = m.steganalyzer.scores(to_batch(std::span(&spec, 1)), Mode::inference);
  return {p[0], p[1]};
}

/// Result of sending a batch through encoder -> audio channel -> decoder.
struct TransmissionBatch {
  nn::Tensor<float> carrier_spec;
  nn::Tensor<float> secret_spec;
  nn::Tensor<float> received_spec;  // STFT of the (possibly noisy) stego audio
  nn::Tensor<float> revealed_spec;
  std::vector<Waveform> stego_audio;  // as received
  std::vector<Waveform> revealed_audio;
};

/// Sender and receiver in inference mode. The stego spectrogram is rendered
/// to audio, optionally corrupted with white noise at `channel_snr_db`, and
/// re-analyzed before decoding.
inline TransmissionBatch transmit(ModelSet<float>& m, const StftEngine& engine,
                                  std::span<const Waveform* const> carriers, std::span<const Waveform* const> secrets,
                                  std::optional<double> channel_snr_db = std::nullopt, Rng* noise_rng = nullptr) {
  TransmissionBatch out;
  out.carrier_spec = analyze_batch(engine, carriers);
  out.secret_spec = analyze_batch(engine, secrets);
  const auto stego_spec = m.encoder.forward(out.carrier_spec, out.secret_spec, Mode::inference);
  out.stego_audio.reserve(carriers.size());
  for (std::size_t i = 0; i < carriers.size(); ++i) {
    Waveform w = synthesize_one(engine, stego_spec, i);
    if (channel_snr_db) {
      if (noise_rng == nullptr) throw Error("transmit: channel noise requested without rng");
      w = add_channel_noise(w, *channel_snr_db, *noise_rng);
    }
    out.stego_audio.push_back(std::move(w));
  }
  std::vector<const Waveform*> rx;
  for (const auto& w : out.stego_audio) rx.push_back(&w);
  out.received_spec = analyze_batch(engine, rx);
  out.revealed_spec = m.decoder.forward(out.received_spec, Mode::inference);
  for (std::size_t i = 0; i < carriers.size(); ++i) out.revealed_audio.push_back(synthesize_one(engine, out.revealed_spec, i));
  return out;
}

/// Sender side: stego audio for one canonical (carrier, secret) pair.
inline Waveform embed(ModelSet<float>& m, const StftEngine& engine, const Waveform& carrier, const Waveform& secret) {
  const Waveform* c = &carrier;
  const Waveform* s = &secret;
  const auto stego = m.encoder.forward(analyze_batch(engine, std::span(&c, 1)), analyze_batch(engine, std::span(&s, 1)),
                                       Mode::inference);
  return synthesize_one(engine, stego, 0);
}

/// Receiver side: revealed secret audio from canonical stego audio.
inline Waveform extract(ModelSet<float>& m, const StftEngine& engine, const Waveform& stego) {
  const Waveform* w = &stego;
  return synthesize_one(engine, m.decoder.forward(analyze_batch(engine, std::span(&w, 1)), Mode::inference), 0);
}

/// Steganalyzer stego probability for canonical audio.
inline double detect(ModelSet<float>& m, const StftEngine& engine, const Waveform& audio) {
  const Waveform* w = &audio;
  return m.steganalyzer.scores(analyze_batch(engine, std::span(&w, 1)), Mode::inference)[1];
}

}  // namespace stegowave
