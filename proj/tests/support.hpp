#pragma once

#include <cmath>
#include <functional>

#include "invrescale/invrescale.hpp"

namespace support {

using namespace invrescale;

// Worst relative error between the tape gradient of L = <forward(), r> with
// respect to leaf p and central differences, over `probes` random
// coordinates of p. forward must read p's current value.
inline double max_grad_error(Var<double>& p, const std::function<Var<double>()>& forward, std::size_t probes,
                             SeededRng& rng, double h = 1e-6) {
  const auto out = forward();
  const auto r = uniform_tensor<double>(out.dims(), -1.0, 1.0, rng);
  p.zero_grad();
  ad::backward(ad::dot_constant(out, r));
  const auto analytic = p.grad();
  auto objective = [&](BasicTensor<double>&) {
    ad::NoGradGuard no_grad;
    const auto v = forward().value();
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) acc += v[i] * r[i];
    return acc;
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < probes; ++k) {
    const std::size_t i = rng.below(p.value().size());
    const double numeric = central_difference(objective, p.mutable_value(), i, h);
    worst = std::max(worst, gradient_relative_error(analytic[i], numeric));
  }
  return worst;
}

inline Var<double> random_leaf(Shape dims, SeededRng& rng, double lo = -1.0, double hi = 1.0) {
  return Var<double>::leaf(uniform_tensor<double>(std::move(dims), lo, hi, rng));
}

// Random rotation built from Givens rotations; independent of the SVD code.
inline BasicTensor<double> givens_rotation(std::size_t n, SeededRng& rng) {
  auto q = BasicTensor<double>::identity(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double th = rng.uniform(0.0, 6.283185307179586);
      const double c = std::cos(th), s = std::sin(th);
      for (std::size_t k = 0; k < n; ++k) {
        const double a = q(k, i), b = q(k, j);
        q(k, i) = c * a - s * b;
        q(k, j) = s * a + c * b;
      }
    }
  return q;
}

}  // namespace support
