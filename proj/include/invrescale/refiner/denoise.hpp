#pragma once

#include <cmath>

#include "invrescale/numerics/autograd.hpp"
#include "invrescale/refiner/schedule.hpp"

namespace invrescale {

// F_0 = (F_T − √(1−ᾱ_t)·ε) / √ᾱ_t, evaluated per element in double.
template <class T>
BasicTensor<T> one_step_denoise(const BasicTensor<T>& f_t, const BasicTensor<T>& eps, const NoiseSchedule& sched,
                                int t) {
  f_t.require_same_shape(eps, "one_step_denoise");
  const double ab = sched.alpha_bar(t);
  const double noise = std::sqrt(1.0 - ab), signal = std::sqrt(ab);
  BasicTensor<T> out(f_t.dims());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<T>((static_cast<double>(f_t[i]) - noise * static_cast<double>(eps[i])) / signal);
  return out;
}

// Forward corruption √ᾱ_t·z + √(1−ᾱ_t)·n, the algebraic inverse of the above.
template <class T>
BasicTensor<T> corrupt(const BasicTensor<T>& clean, const BasicTensor<T>& noise, const NoiseSchedule& sched, int t) {
  clean.require_same_shape(noise, "corrupt");
  const double ab = sched.alpha_bar(t);
  BasicTensor<T> out(clean.dims());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<T>(std::sqrt(ab) * static_cast<double>(clean[i]) +
                            std::sqrt(1.0 - ab) * static_cast<double>(noise[i]));
  return out;
}

namespace ad {

template <class T>
Var<T> one_step_denoise(const Var<T>& f_t, const Var<T>& eps, const NoiseSchedule& sched, int t) {
  const double ab = sched.alpha_bar(t);
  const double d_f = 1.0 / std::sqrt(ab);
  const double d_eps = -std::sqrt(1.0 - ab) / std::sqrt(ab);
  return record(invrescale::one_step_denoise(f_t.value(), eps.value(), sched, t), {f_t, eps},
                [f_t, eps, d_f, d_eps](const BasicTensor<T>& g) {
                  if (f_t.requires_grad()) f_t.node()->accumulate(g * static_cast<T>(d_f));
                  if (eps.requires_grad()) eps.node()->accumulate(g * static_cast<T>(d_eps));
                });
}

}  // namespace ad
}  // namespace invrescale
