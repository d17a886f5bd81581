#pragma once

// Adaptive detail prior: a learnable (C_hf, P, P) tile of high-frequency
// values, tiled over the low-resolution grid in place of the discarded
// channels at upscale time. P = 1 gives one scalar per channel.

#include <string>

#include "invrescale/numerics/autograd.hpp"
#include "invrescale/numerics/rng.hpp"

namespace invrescale {

enum class AdpKind { kZeros, kRandom, kLearnable };

inline const char* adp_kind_name(AdpKind k) {
  switch (k) {
    case AdpKind::kZeros: return "zeros";
    case AdpKind::kRandom: return "random";
    case AdpKind::kLearnable: return "learnable";
  }
  return "?";
}

inline AdpKind parse_adp_kind(const std::string& s) {
  if (s == "zeros") return AdpKind::kZeros;
  if (s == "random") return AdpKind::kRandom;
  if (s == "learnable") return AdpKind::kLearnable;
  throw ConfigError("unknown ADP kind '" + s + "' (expected zeros|random|learnable)");
}

// Amplitude of the "random" prior: uniform(−a, a).
inline constexpr double kRandomAdpAmplitude = 0.5;

template <class T>
BasicTensor<T> make_adp_tile(AdpKind kind, std::size_t channels, std::size_t tile, SeededRng& rng) {
  if (kind == AdpKind::kRandom)
    return uniform_tensor<T>({channels, tile, tile}, -kRandomAdpAmplitude, kRandomAdpAmplitude, rng);
  return BasicTensor<T>({channels, tile, tile});
}

// Tile repeated over (h, w), truncated at the far edges.
template <class T>
BasicTensor<T> adp_map(const BasicTensor<T>& tile, std::size_t h, std::size_t w) {
  if (tile.rank() != 3) throw ShapeError("adp_map expects a (C,P,Q) tile");
  const std::size_t c = tile.dim(0), p = tile.dim(1), q = tile.dim(2);
  BasicTensor<T> out({c, h, w});
  for (std::size_t k = 0; k < c; ++k)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) out(k, i, j) = tile(k, i % p, j % q);
  return out;
}

namespace ad {

template <class T>
Var<T> adp_map(const Var<T>& tile, std::size_t h, std::size_t w) {
  return record(invrescale::adp_map(tile.value(), h, w), {tile}, [tile, h, w](const BasicTensor<T>& g) {
    const auto& tv = tile.value();
    const std::size_t c = tv.dim(0), p = tv.dim(1), q = tv.dim(2);
    BasicTensor<T> gt(tv.dims());
    for (std::size_t k = 0; k < c; ++k)
      for (std::size_t i = 0; i < h; ++i)
        for (std::size_t j = 0; j < w; ++j) gt(k, i % p, j % q) += g(k, i, j);
    tile.node()->accumulate(std::move(gt));
  });
}

}  // namespace ad
}  // namespace invrescale
