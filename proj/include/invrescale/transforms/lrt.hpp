#pragma once

// Learnable reversible transform: pixel-unshuffle by s, then an orthogonal
// (C·s²)×(C·s²) matrix applied to the channel vector at every spatial site.
// The inverse applies Wᵀ per site and pixel-shuffles back.

#include <cmath>

#include "invrescale/numerics/autograd.hpp"
#include "invrescale/numerics/kernels.hpp"
#include "invrescale/numerics/linalg.hpp"
#include "invrescale/numerics/rng.hpp"
#include "invrescale/transforms/pixel_shuffle.hpp"

namespace invrescale {

// ‖WᵀW − I‖∞ bound under which transpose inversion is trusted.
inline constexpr double kOrthogonalityBudget = 1e-4;

template <class T>
struct OrthogonalKernel {
  BasicTensor<T> w;
  std::size_t scale = 2;
  std::size_t channels = 1;

  std::size_t extent() const { return channels * scale * scale; }

  void validate() const {
    if (scale == 0 || channels == 0) throw ShapeError("OrthogonalKernel: scale and channels must be positive");
    if (w.rank() != 2 || w.dim(0) != extent() || w.dim(1) != extent())
      throw ShapeError("OrthogonalKernel: matrix " + shape_string(w.dims()) + " does not match C·s² = " +
                       std::to_string(extent()));
  }

  double orthogonality_error() const { return invrescale::orthogonality_error(w); }
  bool within_budget() const { return orthogonality_error() < kOrthogonalityBudget; }

  static OrthogonalKernel identity(std::size_t channels, std::size_t scale) {
    OrthogonalKernel k{BasicTensor<T>::identity(channels * scale * scale), scale, channels};
    return k;
  }

  // Uniform(−1/√n, 1/√n) draw followed by projection onto the orthogonal group.
  static OrthogonalKernel random(std::size_t channels, std::size_t scale, SeededRng& rng) {
    const std::size_t n = channels * scale * scale;
    const double bound = 1.0 / std::sqrt(static_cast<double>(n));
    auto raw = uniform_tensor<T>({n, n}, -bound, bound, rng);
    return OrthogonalKernel{orthogonal_project(raw), scale, channels};
  }

  // Block-diagonal Haar analysis matrix for s = 2; rows 4c+k are the LL, LH,
  // HL, HH filters of channel c over its phases (dy·2+dx).
  static OrthogonalKernel haar(std::size_t channels) {
    static constexpr int filters[4][4] = {{1, 1, 1, 1}, {1, -1, 1, -1}, {1, 1, -1, -1}, {1, -1, -1, 1}};
    OrthogonalKernel k{BasicTensor<T>({4 * channels, 4 * channels}), 2, channels};
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t f = 0; f < 4; ++f)
        for (std::size_t p = 0; p < 4; ++p) k.w(4 * c + f, 4 * c + p) = static_cast<T>(filters[f][p]) / T{2};
    return k;
  }
};

// Restores the orthogonality budget by replacing W with its polar factor.
template <class T>
OrthogonalKernel<T> reproject(const OrthogonalKernel<T>& k) {
  OrthogonalKernel<T> out = k;
  out.w = orthogonal_project(k.w);
  return out;
}

namespace detail {

template <class T>
void check_site_operands(const BasicTensor<T>& x, const BasicTensor<T>& w) {
  if (x.rank() != 3 || w.rank() != 2 || w.dim(0) != w.dim(1) || w.dim(1) != x.dim(0))
    throw ShapeError("per-site transform: matrix " + shape_string(w.dims()) + " incompatible with " +
                     shape_string(x.dims()));
}

// y[:, site] = W · x[:, site]  (or Wᵀ when transposed)
template <class T>
BasicTensor<T> site_transform(const BasicTensor<T>& x, const BasicTensor<T>& w, bool transposed) {
  check_site_operands(x, w);
  const std::size_t n = x.dim(0), sites = x.dim(1) * x.dim(2);
  BasicTensor<T> y(x.dims());
  if (transposed)
    kernels::gemm_at_b_acc(w.data(), x.data(), y.data(), n, n, sites);
  else
    kernels::gemm_acc(w.data(), x.data(), y.data(), n, n, sites);
  return y;
}

}  // namespace detail

template <class T>
BasicTensor<T> lrt_forward(const BasicTensor<T>& x, const OrthogonalKernel<T>& k) {
  k.validate();
  if (x.rank() != 3 || x.dim(0) != k.channels)
    throw ShapeError("lrt_forward: input " + shape_string(x.dims()) + " does not match kernel channels " +
                     std::to_string(k.channels));
  return detail::site_transform(pixel_unshuffle(x, k.scale), k.w, false);
}

template <class T>
BasicTensor<T> lrt_inverse(const BasicTensor<T>& y, const OrthogonalKernel<T>& k) {
  k.validate();
  if (y.rank() != 3 || y.dim(0) != k.extent())
    throw ShapeError("lrt_inverse: input " + shape_string(y.dims()) + " does not match kernel extent " +
                     std::to_string(k.extent()));
  return pixel_shuffle(detail::site_transform(y, k.w, true), k.scale);
}

namespace ad {

// Per-site W·v (or Wᵀ·v) with gradients for both operands.
template <class T>
Var<T> site_transform(const Var<T>& x, const Var<T>& w, bool transposed) {
  auto out = detail::site_transform(x.value(), w.value(), transposed);
  return record(std::move(out), {x, w}, [x, w, transposed](const BasicTensor<T>& g) {
    const std::size_t n = x.value().dim(0), sites = x.value().dim(1) * x.value().dim(2);
    if (x.requires_grad()) x.node()->accumulate(detail::site_transform(g, w.value(), !transposed));
    if (w.requires_grad()) {
      BasicTensor<T> gw(w.dims());
      // forward: dL/dW = G Xᵀ; transposed: dL/dW = X Gᵀ
      if (transposed)
        kernels::gemm_a_bt_acc(x.value().data(), g.data(), gw.data(), n, n, sites);
      else
        kernels::gemm_a_bt_acc(g.data(), x.value().data(), gw.data(), n, n, sites);
      w.node()->accumulate(std::move(gw));
    }
  });
}

template <class T>
Var<T> lrt_forward(const Var<T>& x, const Var<T>& w, std::size_t scale) {
  return site_transform(pixel_unshuffle(x, scale), w, false);
}

template <class T>
Var<T> lrt_inverse(const Var<T>& y, const Var<T>& w, std::size_t scale) {
  return pixel_shuffle(site_transform(y, w, true), scale);
}

}  // namespace ad
}  // namespace invrescale
