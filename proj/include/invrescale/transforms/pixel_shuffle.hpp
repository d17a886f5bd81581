#pragma once

#include <string>

#include "invrescale/numerics/autograd.hpp"
#include "invrescale/numerics/tensor.hpp"

namespace invrescale {

// Space-to-depth. Output channel c·s² + dy·s + dx at (h, w) holds input
// channel c at (h·s + dy, w·s + dx).
template <class T>
BasicTensor<T> pixel_unshuffle(const BasicTensor<T>& x, std::size_t s) {
  if (x.rank() != 3) throw ShapeError("pixel_unshuffle expects (C,H,W), got " + shape_string(x.dims()));
  if (s == 0 || x.dim(1) % s != 0 || x.dim(2) % s != 0)
    throw ShapeError("pixel_unshuffle: spatial extents " + shape_string(x.dims()) + " not divisible by " +
                     std::to_string(s));
  const std::size_t c = x.dim(0), h = x.dim(1) / s, w = x.dim(2) / s;
  BasicTensor<T> out({c * s * s, h, w});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t dy = 0; dy < s; ++dy)
      for (std::size_t dx = 0; dx < s; ++dx) {
        const std::size_t oc = ch * s * s + dy * s + dx;
        for (std::size_t i = 0; i < h; ++i)
          for (std::size_t j = 0; j < w; ++j) out(oc, i, j) = x(ch, i * s + dy, j * s + dx);
      }
  return out;
}

// Depth-to-space; exact inverse of pixel_unshuffle.
template <class T>
BasicTensor<T> pixel_shuffle(const BasicTensor<T>& x, std::size_t s) {
  if (x.rank() != 3) throw ShapeError("pixel_shuffle expects (C,h,w), got " + shape_string(x.dims()));
  if (s == 0 || x.dim(0) % (s * s) != 0)
    throw ShapeError("pixel_shuffle: channel count " + std::to_string(x.dim(0)) + " not divisible by " +
                     std::to_string(s * s));
  const std::size_t c = x.dim(0) / (s * s), h = x.dim(1), w = x.dim(2);
  BasicTensor<T> out({c, h * s, w * s});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t dy = 0; dy < s; ++dy)
      for (std::size_t dx = 0; dx < s; ++dx) {
        const std::size_t ic = ch * s * s + dy * s + dx;
        for (std::size_t i = 0; i < h; ++i)
          for (std::size_t j = 0; j < w; ++j) out(ch, i * s + dy, j * s + dx) = x(ic, i, j);
      }
  return out;
}

namespace ad {

template <class T>
Var<T> pixel_unshuffle(const Var<T>& x, std::size_t s) {
  return record(invrescale::pixel_unshuffle(x.value(), s), {x},
                [x, s](const BasicTensor<T>& g) { x.node()->accumulate(invrescale::pixel_shuffle(g, s)); });
}

template <class T>
Var<T> pixel_shuffle(const Var<T>& x, std::size_t s) {
  return record(invrescale::pixel_shuffle(x.value(), s), {x},
                [x, s](const BasicTensor<T>& g) { x.node()->accumulate(invrescale::pixel_unshuffle(g, s)); });
}

}  // namespace ad
}  // namespace invrescale
