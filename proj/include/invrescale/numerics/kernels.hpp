#pragma once

// Dense inner loops shared by the convolution, linear and per-site matrix
// operations. All matrices are row-major; "acc" variants accumulate into C.

#include <cstddef>

#include "invrescale/numerics/tensor.hpp"

namespace invrescale::kernels {

// C(M,N) += A(M,K) · B(K,N)
template <class T>
void gemm_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = a[i * k + p];
      if (aip == T{0}) continue;
      const T* brow = b + p * n;
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

// C(K,N) += Aᵀ · B  with A(M,K), B(M,N)
template <class T>
void gemm_at_b_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* brow = b + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = a[i * k + p];
      if (aip == T{0}) continue;
      T* crow = c + p * n;
#pragma omp simd
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

// C(M,K) += A · Bᵀ  with A(M,N), B(K,N)
template <class T>
void gemm_a_bt_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    const T* arow = a + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T* brow = b + p * n;
      T s{0};
#pragma omp simd reduction(+ : s)
      for (std::size_t j = 0; j < n; ++j) s += arow[j] * brow[j];
      c[i * k + p] += s;
    }
  }
}

struct ConvGeometry {
  std::size_t in_channels, in_h, in_w;
  std::size_t kernel, stride, pad;
  std::size_t out_h, out_w;

  static ConvGeometry make(std::size_t c, std::size_t h, std::size_t w, std::size_t k, std::size_t stride,
                           std::size_t pad) {
    if (h + 2 * pad < k || w + 2 * pad < k) throw ShapeError("conv2d: input smaller than kernel");
    return {c, h, w, k, stride, pad, (h + 2 * pad - k) / stride + 1, (w + 2 * pad - k) / stride + 1};
  }
  std::size_t col_rows() const { return in_channels * kernel * kernel; }
  std::size_t col_cols() const { return out_h * out_w; }
};

// Unfold x (C,H,W) into columns (C·K·K, Ho·Wo), zero padded.
template <class T>
void im2col(const T* x, const ConvGeometry& g, T* col) {
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(g.pad);
  for (std::size_t c = 0; c < g.in_channels; ++c)
    for (std::size_t ky = 0; ky < g.kernel; ++ky)
      for (std::size_t kx = 0; kx < g.kernel; ++kx) {
        T* row = col + ((c * g.kernel + ky) * g.kernel + kx) * g.col_cols();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - pad;
          T* out = row + oy * g.out_w;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) {
            for (std::size_t ox = 0; ox < g.out_w; ++ox) out[ox] = T{0};
            continue;
          }
          const T* in = x + (c * g.in_h + static_cast<std::size_t>(iy)) * g.in_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - pad;
            out[ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) ? T{0} : in[ix];
          }
        }
      }
}

// Adjoint of im2col: scatter-add columns back into x (C,H,W).
template <class T>
void col2im_acc(const T* col, const ConvGeometry& g, T* x) {
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(g.pad);
  for (std::size_t c = 0; c < g.in_channels; ++c)
    for (std::size_t ky = 0; ky < g.kernel; ++ky)
      for (std::size_t kx = 0; kx < g.kernel; ++kx) {
        const T* row = col + ((c * g.kernel + ky) * g.kernel + kx) * g.col_cols();
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) - pad;
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
          const T* src = row + oy * g.out_w;
          T* dst = x + (c * g.in_h + static_cast<std::size_t>(iy)) * g.in_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) - pad;
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.in_w)) dst[ix] += src[ox];
          }
        }
      }
}

}  // namespace invrescale::kernels
