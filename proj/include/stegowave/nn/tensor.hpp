#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <new>
#include <string>
#include <unordered_map>
#include <vector>

#include "stegowave/core/error.hpp"

namespace stegowave::nn {

namespace detail {

// Activations are large and short-lived. Returning their pages to the OS on
// every free makes the next allocation page-fault through the whole buffer,
// which dominates runtime on some hosts, so large blocks are recycled by
// exact size instead.
class BlockCache {
 public:
  static constexpr std::size_t kMinBytes = std::size_t{1} << 16;
  static constexpr std::size_t kMaxCachedBytes = std::size_t{1} << 30;
  static constexpr std::align_val_t kAlign{64};

  ~BlockCache() { clear(); }

  void* take(std::size_t bytes) {
    auto it = free_.find(bytes);
    if (it != free_.end() && !it->second.empty()) {
      void* p = it->second.back();
      it->second.pop_back();
      cached_ -= bytes;
      return p;
    }
    return ::operator new(bytes, kAlign);
  }

  void give(void* p, std::size_t bytes) {
    if (cached_ + bytes > kMaxCachedBytes) clear();
    free_[bytes].push_back(p);
    cached_ += bytes;
  }

  void clear() {
    for (auto& [bytes, blocks] : free_) {
      for (void* p : blocks) ::operator delete(p, kAlign);
    }
    free_.clear();
    cached_ = 0;
  }

 private:
  std::unordered_map<std::size_t, std::vector<void*>> free_;
  std::size_t cached_ = 0;
};

inline BlockCache& block_cache() {
  thread_local BlockCache cache;
  return cache;
}

template <typename T>
struct RecyclingAllocator {
  using value_type = T;
  RecyclingAllocator() = default;
  template <typename U>
  RecyclingAllocator(const RecyclingAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    const std::size_t bytes = n * sizeof(T);
    if (bytes < BlockCache::kMinBytes) return static_cast<T*>(::operator new(bytes, BlockCache::kAlign));
    return static_cast<T*>(block_cache().take(bytes));
  }
  void deallocate(T* p, std::size_t n) noexcept {
    const std::size_t bytes = n * sizeof(T);
    if (bytes < BlockCache::kMinBytes) {
      ::operator delete(p, BlockCache::kAlign);
    } else {
      block_cache().give(p, bytes);
    }
  }
  template <typename U>
  bool operator==(const RecyclingAllocator<U>&) const noexcept { return true; }
};

}  // namespace detail

/// Dense NCHW tensor.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t n, std::size_t c, std::size_t h, std::size_t w, T fill = T(0))
      : shape_{n, c, h, w}, data_(n * c * h * w, fill) {}

  std::size_t n() const { return shape_[0]; }
  std::size_t c() const { return shape_[1]; }
  std::size_t h() const { return shape_[2]; }
  std::size_t w() const { return shape_[3]; }
  std::size_t plane() const { return shape_[2] * shape_[3]; }
  std::size_t sample_size() const { return shape_[1] * plane(); }
  std::size_t size() const { return data_.size(); }
  const std::array<std::size_t, 4>& shape() const { return shape_; }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  T* sample(std::size_t i) { return data_.data() + i * sample_size(); }
  const T* sample(std::size_t i) const { return data_.data() + i * sample_size(); }
  T* channel(std::size_t i, std::size_t ch) { return sample(i) + ch * plane(); }
  const T* channel(std::size_t i, std::size_t ch) const { return sample(i) + ch * plane(); }

  T& operator()(std::size_t i, std::size_t ch, std::size_t y, std::size_t x) {
    return data_[((i * shape_[1] + ch) * shape_[2] + y) * shape_[3] + x];
  }
  T operator()(std::size_t i, std::size_t ch, std::size_t y, std::size_t x) const {
    return data_[((i * shape_[1] + ch) * shape_[2] + y) * shape_[3] + x];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  T operator[](std::size_t i) const { return data_[i]; }

  using Storage = std::vector<T, detail::RecyclingAllocator<T>>;

  Storage& values() { return data_; }
  const Storage& values() const { return data_; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  std::string shape_string() const {
    return "(" + std::to_string(shape_[0]) + ", " + std::to_string(shape_[1]) + ", " +
           std::to_string(shape_[2]) + ", " + std::to_string(shape_[3]) + ")";
  }

 private:
  std::array<std::size_t, 4> shape_{0, 0, 0, 0};
  std::vector<T, detail::RecyclingAllocator<T>> data_;
};

/// Stacks along the channel axis.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.n() != b.n() || a.h() != b.h() || a.w() != b.w()) {
    throw ShapeError("concat_channels: " + a.shape_string() + " vs " + b.shape_string());
  }
  Tensor<T> out(a.n(), a.c() + b.c(), a.h(), a.w());
  for (std::size_t i = 0; i < a.n(); ++i) {
    std::copy_n(a.sample(i), a.sample_size(), out.sample(i));
    std::copy_n(b.sample(i), b.sample_size(), out.sample(i) + a.sample_size());
  }
  return out;
}

/// Channels [first, first + count) of every sample.
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& x, std::size_t first, std::size_t count) {
  Tensor<T> out(x.n(), count, x.h(), x.w());
  for (std::size_t i = 0; i < x.n(); ++i) {
    std::copy_n(x.channel(i, first), count * x.plane(), out.sample(i));
  }
  return out;
}

/// Samples [first, first + count).
template <typename T>
Tensor<T> slice_batch(const Tensor<T>& x, std::size_t first, std::size_t count) {
  Tensor<T> out(count, x.c(), x.h(), x.w());
  std::copy_n(x.sample(first), count * x.sample_size(), out.data());
  return out;
}

/// Concatenates along the batch axis.
template <typename T>
Tensor<T> concat_batch(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.c() != b.c() || a.h() != b.h() || a.w() != b.w()) {
    throw ShapeError("concat_batch: " + a.shape_string() + " vs " + b.shape_string());
  }
  Tensor<T> out(a.n() + b.n(), a.c(), a.h(), a.w());
  std::copy_n(a.data(), a.size(), out.data());
  std::copy_n(b.data(), b.size(), out.data() + a.size());
  return out;
}

template <typename T>
void add_inplace(Tensor<T>& dst, const Tensor<T>& src, T scale = T(1)) {
  if (!dst.same_shape(src)) throw ShapeError("add_inplace: " + dst.shape_string() + " vs " + src.shape_string());
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
}

template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& x) {
  Tensor<To> out(x.n(), x.c(), x.h(), x.w());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = static_cast<To>(x[i]);
  return out;
}

}  // namespace stegowave::nn
