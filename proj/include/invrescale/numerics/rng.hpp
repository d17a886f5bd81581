#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <random>

#include "invrescale/numerics/tensor.hpp"

namespace invrescale {

// Portable seeded generator. std::mt19937_64 is fully specified by the
// standard; the distributions below are written out so that streams are
// identical across standard libraries (std::uniform_real_distribution is not).
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::size_t below(std::size_t n) {
    if (n == 0) return 0;
    // Rejection sampling keeps the draw unbiased.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do r = engine_();
    while (r >= limit);
    return static_cast<std::size_t>(r % n);
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Independent child stream, e.g. one per frozen network.
  SeededRng fork(std::uint64_t salt) {
    return SeededRng(next_u64() ^ (salt * 0x9E3779B97F4A7C15ULL));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

template <class T>
BasicTensor<T> uniform_tensor(Shape dims, double lo, double hi, SeededRng& rng) {
  BasicTensor<T> t(std::move(dims));
  for (auto& v : t.values()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

template <class T>
BasicTensor<T> normal_tensor(Shape dims, double stddev, SeededRng& rng) {
  BasicTensor<T> t(std::move(dims));
  for (auto& v : t.values()) v = static_cast<T>(stddev * rng.normal());
  return t;
}

template <class T>
bool bitwise_equal(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return a.dims() == b.dims() &&
         (a.size() == 0 || std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0);
}

}  // namespace invrescale
