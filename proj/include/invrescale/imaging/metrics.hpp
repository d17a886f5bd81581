#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "invrescale/numerics/tensor.hpp"

namespace invrescale {

inline constexpr double kPsnrCap = 99.0;
inline constexpr double kPsnrMseFloor = 1e-10;

inline constexpr std::size_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

template <class T>
double mean_squared_error(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  a.require_same_shape(b, "mean_squared_error");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

inline double psnr_from_mse(double mse) { return mse < kPsnrMseFloor ? kPsnrCap : 10.0 * std::log10(1.0 / mse); }

// Peak signal-to-noise ratio for signals with range 1, capped at 99 dB.
template <class T>
double psnr(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return psnr_from_mse(mean_squared_error(a, b));
}

// Normalised 1-D Gaussian; the 2-D window is its outer product.
inline std::vector<double> gaussian_window(std::size_t n = kSsimWindow, double sigma = kSsimSigma) {
  std::vector<double> g(n);
  const double c = 0.5 * static_cast<double>(n - 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(i) - c;
    g[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += g[i];
  }
  for (auto& v : g) v /= sum;
  return g;
}

namespace detail {

// Valid-region separable filter of one plane.
inline std::vector<double> filter_valid(const std::vector<double>& p, std::size_t h, std::size_t w,
                                        const std::vector<double>& g) {
  const std::size_t n = g.size(), oh = h - n + 1, ow = w - n + 1;
  std::vector<double> tmp(h * ow), out(oh * ow);
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < ow; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += g[k] * p[i * w + j + k];
      tmp[i * ow + j] = acc;
    }
  for (std::size_t i = 0; i < oh; ++i)
    for (std::size_t j = 0; j < ow; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += g[k] * tmp[(i + k) * ow + j];
      out[i * ow + j] = acc;
    }
  return out;
}

}  // namespace detail

// Mean local SSIM over the valid region, averaged over channels.
template <class T>
double ssim(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  a.require_same_shape(b, "ssim");
  if (a.rank() != 3) throw ShapeError("ssim expects (C,H,W), got " + shape_string(a.dims()));
  const std::size_t c = a.dim(0), h = a.dim(1), w = a.dim(2);
  if (h < kSsimWindow || w < kSsimWindow)
    throw ShapeError("ssim: image " + std::to_string(w) + "x" + std::to_string(h) + " is smaller than the " +
                     std::to_string(kSsimWindow) + "x" + std::to_string(kSsimWindow) + " window");
  const auto g = gaussian_window();
  const double c1 = (kSsimK1 * 1.0) * (kSsimK1 * 1.0), c2 = (kSsimK2 * 1.0) * (kSsimK2 * 1.0);
  const std::size_t plane = h * w;
  double total = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    std::vector<double> pa(plane), pb(plane), aa(plane), bb(plane), ab(plane);
    for (std::size_t i = 0; i < plane; ++i) {
      pa[i] = static_cast<double>(a[k * plane + i]);
      pb[i] = static_cast<double>(b[k * plane + i]);
      aa[i] = pa[i] * pa[i];
      bb[i] = pb[i] * pb[i];
      ab[i] = pa[i] * pb[i];
    }
    const auto mu_a = detail::filter_valid(pa, h, w, g), mu_b = detail::filter_valid(pb, h, w, g);
    const auto e_aa = detail::filter_valid(aa, h, w, g), e_bb = detail::filter_valid(bb, h, w, g);
    const auto e_ab = detail::filter_valid(ab, h, w, g);
    double acc = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double ma = mu_a[i], mb = mu_b[i];
      const double va = e_aa[i] - ma * ma, vb = e_bb[i] - mb * mb, cov = e_ab[i] - ma * mb;
      acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    total += acc / static_cast<double>(mu_a.size());
  }
  return total / static_cast<double>(c);
}

inline std::uintmax_t file_bytes(const std::filesystem::path& p) {
  std::error_code ec;
  const auto n = std::filesystem::file_size(p, ec);
  if (ec) throw IoError("cannot stat " + p.string() + ": " + ec.message());
  return n;
}

inline double compression_ratio(std::uintmax_t original_bytes, std::uintmax_t lr_bytes) {
  if (lr_bytes == 0) throw IoError("compression_ratio: LR artifact is empty");
  return static_cast<double>(original_bytes) / static_cast<double>(lr_bytes);
}

inline double compression_ratio(const std::filesystem::path& original, const std::filesystem::path& lr) {
  return compression_ratio(file_bytes(original), file_bytes(lr));
}

}  // namespace invrescale
