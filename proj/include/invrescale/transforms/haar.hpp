#pragma once

// Fixed orthonormal 2-D Haar transform, the baseline the learnable transform
// replaces. Per input channel and 2×2 block (a b / c d) the outputs are
//   LL = (a+b+c+d)/2, LH = (a−b+c−d)/2, HL = (a+b−c−d)/2, HH = (a−b−c+d)/2
// stored as channels 4c+0..4c+3. A constant image of value v has LL = 2v.

#include "invrescale/numerics/tensor.hpp"

namespace invrescale {

template <class T>
BasicTensor<T> haar_forward(const BasicTensor<T>& x) {
  if (x.rank() != 3) throw ShapeError("haar_forward expects (C,H,W), got " + shape_string(x.dims()));
  if (x.dim(1) % 2 != 0 || x.dim(2) % 2 != 0)
    throw ShapeError("haar_forward: odd spatial extents " + shape_string(x.dims()));
  const std::size_t c = x.dim(0), h = x.dim(1) / 2, w = x.dim(2) / 2;
  BasicTensor<T> out({4 * c, h, w});
  const T half = T{1} / T{2};
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        const T a = x(ch, 2 * i, 2 * j), b = x(ch, 2 * i, 2 * j + 1);
        const T cc = x(ch, 2 * i + 1, 2 * j), d = x(ch, 2 * i + 1, 2 * j + 1);
        out(4 * ch + 0, i, j) = (a + b + cc + d) * half;
        out(4 * ch + 1, i, j) = (a - b + cc - d) * half;
        out(4 * ch + 2, i, j) = (a + b - cc - d) * half;
        out(4 * ch + 3, i, j) = (a - b - cc + d) * half;
      }
  return out;
}

template <class T>
BasicTensor<T> haar_inverse(const BasicTensor<T>& y) {
  if (y.rank() != 3) throw ShapeError("haar_inverse expects (4C,h,w), got " + shape_string(y.dims()));
  if (y.dim(0) % 4 != 0)
    throw ShapeError("haar_inverse: channel count " + std::to_string(y.dim(0)) + " not divisible by 4");
  const std::size_t c = y.dim(0) / 4, h = y.dim(1), w = y.dim(2);
  BasicTensor<T> out({c, 2 * h, 2 * w});
  const T half = T{1} / T{2};
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < w; ++j) {
        const T ll = y(4 * ch, i, j), lh = y(4 * ch + 1, i, j);
        const T hl = y(4 * ch + 2, i, j), hh = y(4 * ch + 3, i, j);
        out(ch, 2 * i, 2 * j) = (ll + lh + hl + hh) * half;
        out(ch, 2 * i, 2 * j + 1) = (ll - lh + hl - hh) * half;
        out(ch, 2 * i + 1, 2 * j) = (ll + lh - hl - hh) * half;
        out(ch, 2 * i + 1, 2 * j + 1) = (ll - lh - hl + hh) * half;
      }
  return out;
}

}  // namespace invrescale
