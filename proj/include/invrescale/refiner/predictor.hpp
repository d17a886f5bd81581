#pragma once

#include <cmath>
#include <string>

#include "invrescale/invnet/parameters.hpp"
#include "invrescale/refiner/denoise.hpp"

namespace invrescale {

// Noise estimator ε(F_T, C_s, t) consumed by the one-step denoiser.
template <class T>
class EpsilonPredictor {
 public:
  virtual ~EpsilonPredictor() = default;
  virtual Var<T> predict(const ParameterSet<T>& params, const Var<T>& f_t, const Var<T>& c_s, int t,
                         const NoiseSchedule& sched) const = 0;
};

// Three 3×3 convolutions; after the first two, per-channel scale and shift
// produced from C_s by linear maps modulate the features. The output is
// skip-parametrised,
//   ε = k_t·F_T + g_t·r,  k_t = (1 − √ᾱ_t)/√(1 − ᾱ_t),  g_t = √ᾱ_t/√(1 − ᾱ_t),
// so that the one-step denoiser yields F_0 = F_T − r and r = 0 is the
// identity refiner.
template <class T>
class ConditionedResidualNet final : public EpsilonPredictor<T> {
 public:
  ConditionedResidualNet(std::size_t channels, std::size_t hidden, std::size_t cond_dim)
      : channels_(channels), hidden_(hidden), cond_dim_(cond_dim) {}

  void add_parameters(ParameterSet<T>& params, SeededRng& rng) const {
    add_conv(params, "pred.conv1", hidden_, channels_, 3, rng);
    add_conv(params, "pred.conv2", hidden_, hidden_, 3, rng);
    add_conv(params, "pred.conv3", channels_, hidden_, 3, rng, 0.1);
    add_linear(params, "pred.mod1.scale", hidden_, cond_dim_, rng, 0.1);
    add_linear(params, "pred.mod1.shift", hidden_, cond_dim_, rng, 0.1);
    add_linear(params, "pred.mod2.scale", hidden_, cond_dim_, rng, 0.1);
    add_linear(params, "pred.mod2.shift", hidden_, cond_dim_, rng, 0.1);
  }

  static double skip_gain(const NoiseSchedule& sched, int t) {
    const double ab = sched.alpha_bar(t);
    return (1.0 - std::sqrt(ab)) / std::sqrt(1.0 - ab);
  }
  static double residual_gain(const NoiseSchedule& sched, int t) {
    const double ab = sched.alpha_bar(t);
    return std::sqrt(ab) / std::sqrt(1.0 - ab);
  }

  Var<T> residual(const ParameterSet<T>& params, const Var<T>& f_t, const Var<T>& c_s) const {
    auto h = apply_conv(params, "pred.conv1", f_t);
    h = ad::relu(ad::film(h, apply_linear(params, "pred.mod1.scale", c_s), apply_linear(params, "pred.mod1.shift", c_s)));
    h = apply_conv(params, "pred.conv2", h);
    h = ad::relu(ad::film(h, apply_linear(params, "pred.mod2.scale", c_s), apply_linear(params, "pred.mod2.shift", c_s)));
    return apply_conv(params, "pred.conv3", h);
  }

  Var<T> predict(const ParameterSet<T>& params, const Var<T>& f_t, const Var<T>& c_s, int t,
                 const NoiseSchedule& sched) const override {
    auto r = residual(params, f_t, c_s);
    return ad::add(ad::scale(f_t, static_cast<T>(skip_gain(sched, t))),
                   ad::scale(r, static_cast<T>(residual_gain(sched, t))));
  }

 private:
  std::size_t channels_, hidden_, cond_dim_;
};

// Single denoising step at the maximum noise level.
template <class T>
Var<T> refine(const ParameterSet<T>& params, const Var<T>& f_t, const Var<T>& c_s, const EpsilonPredictor<T>& pred,
              const NoiseSchedule& sched) {
  const int t = sched.steps();
  return ad::one_step_denoise(f_t, pred.predict(params, f_t, c_s, t, sched), sched, t);
}

}  // namespace invrescale
