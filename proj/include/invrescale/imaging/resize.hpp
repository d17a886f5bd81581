#pragma once

// Separable cubic-convolution resampling, a = -0.5, pixel-center aligned,
// clamped borders, no antialiasing prefilter.

#include <array>
#include <cmath>
#include <vector>

#include "invrescale/numerics/tensor.hpp"

namespace invrescale {

inline constexpr double kBicubicA = -0.5;

inline double cubic_kernel(double x, double a = kBicubicA) {
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

namespace detail {

struct ResampleTaps {
  std::vector<std::array<std::size_t, 4>> index;
  std::vector<std::array<double, 4>> weight;
};

inline ResampleTaps resample_taps(std::size_t in, std::size_t out) {
  ResampleTaps taps;
  taps.index.resize(out);
  taps.weight.resize(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  const auto last = static_cast<std::ptrdiff_t>(in) - 1;
  for (std::size_t i = 0; i < out; ++i) {
    const double src = (static_cast<double>(i) + 0.5) * scale - 0.5;
    const auto base = static_cast<std::ptrdiff_t>(std::floor(src));
    for (int k = 0; k < 4; ++k) {
      const std::ptrdiff_t tap = base - 1 + k;
      taps.index[i][k] = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(tap, 0, last));
      taps.weight[i][k] = cubic_kernel(src - static_cast<double>(tap));
    }
  }
  return taps;
}

}  // namespace detail

template <class T>
BasicTensor<T> bicubic_resize(const BasicTensor<T>& x, std::size_t out_h, std::size_t out_w) {
  if (x.rank() != 3) throw ShapeError("bicubic_resize expects (C,H,W), got " + shape_string(x.dims()));
  if (out_h == 0 || out_w == 0) throw ShapeError("bicubic_resize: target extents must be positive");
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const auto rows = detail::resample_taps(h, out_h);
  const auto cols = detail::resample_taps(w, out_w);
  std::vector<double> tmp(h * out_w);
  BasicTensor<T> out({c, out_h, out_w});
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t i = 0; i < h; ++i)
      for (std::size_t j = 0; j < out_w; ++j) {
        double acc = 0.0;
        for (int t = 0; t < 4; ++t) acc += cols.weight[j][t] * static_cast<double>(x(k, i, cols.index[j][t]));
        tmp[i * out_w + j] = acc;
      }
    for (std::size_t i = 0; i < out_h; ++i)
      for (std::size_t j = 0; j < out_w; ++j) {
        double acc = 0.0;
        for (int t = 0; t < 4; ++t) acc += rows.weight[i][t] * tmp[rows.index[i][t] * out_w + j];
        out(k, i, j) = static_cast<T>(acc);
      }
  }
  return out;
}

// Bicubic downscale by an integer factor.
template <class T>
BasicTensor<T> bicubic_downscale(const BasicTensor<T>& x, std::size_t factor) {
  if (x.rank() != 3 || factor == 0 || x.dim(1) % factor != 0 || x.dim(2) % factor != 0)
    throw ShapeError("bicubic_downscale: extents " + shape_string(x.dims()) + " not divisible by " +
                     std::to_string(factor));
  return bicubic_resize(x, x.dim(1) / factor, x.dim(2) / factor);
}

}  // namespace invrescale
