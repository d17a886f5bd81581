#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "invrescale/numerics/autograd.hpp"

namespace invrescale {

// 8-bit level of v: clamp to [0,1], then round(v·255), halves rounded away
// from zero (std::round semantics). NaN maps to 0.
template <class T>
std::uint8_t quantize_level(T v) {
  if (!(v == v)) return 0;
  const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
  return static_cast<std::uint8_t>(std::round(c * 255.0));
}

template <class T>
T quantize_value(T v) {
  return static_cast<T>(static_cast<double>(quantize_level(v)) / 255.0);
}

template <class T>
BasicTensor<T> quantize(const BasicTensor<T>& x) {
  BasicTensor<T> out = x;
  for (auto& v : out.values()) v = quantize_value(v);
  return out;
}

namespace ad {

// Straight-through quantizer: forward quantizes, backward passes the gradient
// unchanged inside [0,1] and blocks it outside.
template <class T>
Var<T> quantize_ste(const Var<T>& x) {
  return record(invrescale::quantize(x.value()), {x}, [x](const BasicTensor<T>& g) {
    BasicTensor<T> gx = g;
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const T v = x.value()[i];
      if (v < T{0} || v > T{1}) gx[i] = T{0};
    }
    x.node()->accumulate(std::move(gx));
  });
}

}  // namespace ad
}  // namespace invrescale
