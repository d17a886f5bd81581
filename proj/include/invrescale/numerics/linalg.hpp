#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "invrescale/errors.hpp"
#include "invrescale/numerics/tensor.hpp"

namespace invrescale {

template <class T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2) throw ShapeError("matmul expects rank-2 operands");
  if (a.dim(1) != b.dim(0))
    throw ShapeError("matmul inner extents differ: " + shape_string(a.dims()) + " x " +
                     shape_string(b.dims()));
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  BasicTensor<T> c({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    T* crow = c.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = a(i, p);
      const T* brow = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
  return c;
}

// max |(WᵀW − I)_ij|, accumulated in double.
template <class T>
double orthogonality_error(const BasicTensor<T>& w) {
  if (w.rank() != 2 || w.dim(0) != w.dim(1)) throw ShapeError("orthogonality_error expects a square matrix");
  const std::size_t n = w.dim(0);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t r = 0; r < n; ++r) s += static_cast<double>(w(r, i)) * static_cast<double>(w(r, j));
      worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

template <class T>
struct SvdResult {
  BasicTensor<T> u;      // (n, n), orthogonal
  BasicTensor<T> sigma;  // (n), nonnegative, nonincreasing
  BasicTensor<T> v;      // (n, n), orthogonal; w = U diag(sigma) Vᵀ
};

inline constexpr std::size_t kMaxSvdExtent = 256;

namespace detail {

// One-sided (Hestenes) Jacobi on the columns of a square matrix, in double.
// Columns are stored contiguously: cols[j][i] is element (i, j).
struct JacobiSvd {
  std::size_t n = 0;
  std::vector<std::vector<double>> u;  // columns of U
  std::vector<std::vector<double>> v;  // columns of V
  std::vector<double> sigma;

  static constexpr int kMaxSweeps = 80;

  template <class T>
  explicit JacobiSvd(const BasicTensor<T>& w) {
    if (w.rank() != 2 || w.dim(0) != w.dim(1))
      throw ShapeError("svd_square expects a square matrix, got " + shape_string(w.dims()));
    n = w.dim(0);
    if (n > kMaxSvdExtent) throw ShapeError("svd_square supports n <= 256, got " + std::to_string(n));
    if (!w.all_finite()) throw NonFiniteError("w", "svd_square input");

    u.assign(n, std::vector<double>(n));
    v.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) u[j][i] = static_cast<double>(w(i, j));
      v[j][j] = 1.0;
    }
    run();
    finish();
  }

  void run() {
    // Rounding in the column inner products grows with n.
    const double tolerance = std::max(1e-15, 4.0 * static_cast<double>(n) * 2.220446049250313e-16);
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
      bool rotated = false;
      for (std::size_t p = 0; p + 1 < n; ++p) {
        for (std::size_t q = p + 1; q < n; ++q) {
          double alpha = 0.0, beta = 0.0, gamma = 0.0;
          const auto& up = u[p];
          const auto& uq = u[q];
          for (std::size_t i = 0; i < n; ++i) {
            alpha += up[i] * up[i];
            beta += uq[i] * uq[i];
            gamma += up[i] * uq[i];
          }
          if (gamma == 0.0 || std::abs(gamma) <= tolerance * std::sqrt(alpha * beta)) continue;
          rotated = true;
          const double zeta = (beta - alpha) / (2.0 * gamma);
          const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
          const double c = 1.0 / std::sqrt(1.0 + t * t);
          const double s = c * t;
          rotate(u[p], u[q], c, s);
          rotate(v[p], v[q], c, s);
        }
      }
      if (!rotated) return;
    }
    throw ConvergenceError("svd_square did not converge within " + std::to_string(kMaxSweeps) +
                           " sweeps (ill-conditioned input)");
  }

  static void rotate(std::vector<double>& a, std::vector<double>& b, double c, double s) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double x = a[i], y = b[i];
      a[i] = c * x - s * y;
      b[i] = s * x + c * y;
    }
  }

  void finish() {
    std::vector<double> norms(n);
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (double x : u[j]) s += x * x;
      norms[j] = std::sqrt(s);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

    std::vector<std::vector<double>> su(n), sv(n);
    sigma.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      su[k] = std::move(u[order[k]]);
      sv[k] = std::move(v[order[k]]);
      sigma[k] = norms[order[k]];
    }
    u = std::move(su);
    v = std::move(sv);

    // Columns with (numerically) zero singular value carry no direction; they
    // are replaced by an orthonormal completion of the others.
    const double cutoff = (n > 0 ? sigma[0] : 0.0) * 1e-13;
    for (std::size_t k = 0; k < n; ++k) {
      if (sigma[k] > cutoff && sigma[k] > 0.0) {
        for (double& x : u[k]) x /= sigma[k];
        continue;
      }
      sigma[k] = 0.0;
      complete_column(k);
    }
  }

  void complete_column(std::size_t k) {
    for (std::size_t e = 0; e < n; ++e) {
      std::vector<double> cand(n, 0.0);
      cand[e] = 1.0;
      // Two Gram-Schmidt passes against the accepted columns.
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < k; ++j) {
          double d = 0.0;
          for (std::size_t i = 0; i < n; ++i) d += cand[i] * u[j][i];
          for (std::size_t i = 0; i < n; ++i) cand[i] -= d * u[j][i];
        }
      }
      double norm = 0.0;
      for (double x : cand) norm += x * x;
      norm = std::sqrt(norm);
      if (norm > 1e-6) {
        for (std::size_t i = 0; i < n; ++i) u[k][i] = cand[i] / norm;
        return;
      }
    }
    throw ConvergenceError("svd_square could not complete an orthonormal basis");
  }

  // U Vᵀ in double.
  std::vector<double> polar_factor() const {
    std::vector<double> r(n * n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t i = 0; i < n; ++i) {
        const double uik = u[k][i];
        double* row = r.data() + i * n;
        for (std::size_t j = 0; j < n; ++j) row[j] += uik * v[k][j];
      }
    return r;
  }
};

}  // namespace detail

template <class T>
SvdResult<T> svd_square(const BasicTensor<T>& w) {
  detail::JacobiSvd svd(w);
  const std::size_t n = svd.n;
  SvdResult<T> out{BasicTensor<T>({n, n}), BasicTensor<T>({n}), BasicTensor<T>({n, n})};
  for (std::size_t k = 0; k < n; ++k) {
    out.sigma[k] = static_cast<T>(svd.sigma[k]);
    for (std::size_t i = 0; i < n; ++i) {
      out.u(i, k) = static_cast<T>(svd.u[k][i]);
      out.v(i, k) = static_cast<T>(svd.v[k][i]);
    }
  }
  return out;
}

// Nearest orthogonal matrix U Vᵀ (the polar factor), formed in double.
template <class T>
BasicTensor<T> orthogonal_project(const BasicTensor<T>& w) {
  detail::JacobiSvd svd(w);
  const auto r = svd.polar_factor();
  BasicTensor<T> out({svd.n, svd.n});
  for (std::size_t i = 0; i < r.size(); ++i) out[i] = static_cast<T>(r[i]);
  return out;
}

}  // namespace invrescale
