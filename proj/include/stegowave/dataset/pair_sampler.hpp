#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "stegowave/core/error.hpp"
#include "stegowave/core/rng.hpp"

namespace stegowave {

/// Draws (carrier, secret) index pairs uniformly from a fixed view, with
/// carrier != secret. Single-owner; successive draws advance the rng.
class PairSampler {
 public:
  PairSampler(std::vector<std::size_t> view, std::uint64_t seed) : view_(std::move(view)), rng_(seed) {
    if (view_.size() < 2) throw Error("pair sampler needs at least 2 items, view has " + std::to_string(view_.size()));
  }

  /// Corpus indices of (carrier, secret).
  std::pair<std::size_t, std::size_t> next() {
    const std::size_t n = view_.size();
    const auto i = static_cast<std::size_t>(rng_.below(n));
    auto j = static_cast<std::size_t>(rng_.below(n - 1));
    if (j >= i) ++j;
    return {view_[i], view_[j]};
  }

  const std::vector<std::size_t>& view() const { return view_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

 private:
  std::vector<std::size_t> view_;
  Rng rng_;
};

}  // namespace stegowave
