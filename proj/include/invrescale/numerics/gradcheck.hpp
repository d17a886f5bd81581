#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "invrescale/errors.hpp"
#include "invrescale/numerics/tensor.hpp"

namespace invrescale {

inline constexpr double kDefaultFiniteDiffStep = 1e-3;

// Relative error with denominator max(|analytic|, |numeric|, 1e-6).
inline double gradient_relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

// Central difference of f at coordinate i of x. x is restored on return.
template <class T, class F>
double central_difference(F&& f, BasicTensor<T>& x, std::size_t i, double h = kDefaultFiniteDiffStep) {
  const T saved = x[i];
  x[i] = static_cast<T>(static_cast<double>(saved) + h);
  const double plus = static_cast<double>(f(x));
  x[i] = static_cast<T>(static_cast<double>(saved) - h);
  const double minus = static_cast<double>(f(x));
  x[i] = saved;
  if (!std::isfinite(plus) || !std::isfinite(minus))
    throw NonFiniteError("f", "finite_diff_grad probe at coordinate " + std::to_string(i));
  return (plus - minus) / (2.0 * h);
}

// Full central-difference gradient (f(x + h e_i) − f(x − h e_i)) / 2h.
template <class T, class F>
BasicTensor<T> finite_diff_grad(F&& f, const BasicTensor<T>& x, double h = kDefaultFiniteDiffStep) {
  BasicTensor<T> probe = x;
  BasicTensor<T> grad(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) grad[i] = static_cast<T>(central_difference(f, probe, i, h));
  return grad;
}

}  // namespace invrescale
