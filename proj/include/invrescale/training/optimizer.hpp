#pragma once

// AdamW with decoupled weight decay, applied in the order
//   p ← p·(1 − η·wd);  m ← β1·m + (1−β1)·g;  v ← β2·v + (1−β2)·g²;
//   p ← p − η·m̂/(√v̂ + ε),  m̂ = m/(1−β1ᵗ),  v̂ = v/(1−β2ᵗ).

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "invrescale/invnet/parameters.hpp"

namespace invrescale {

struct AdamWConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  std::uint64_t halve_every = 5000;  // 0 disables the schedule

  void validate() const {
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("betas must lie in [0,1)");
    if (!(eps > 0.0)) throw ConfigError("eps must be positive");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be nonnegative");
  }

  // Rate used by update number `step` (1-based): halved after every full
  // `halve_every` updates.
  double rate_at(std::uint64_t step) const {
    if (halve_every == 0 || step == 0) return lr;
    return std::ldexp(lr, -static_cast<int>(std::min<std::uint64_t>((step - 1) / halve_every, 1000)));
  }
};

template <class T>
struct Moments {
  BasicTensor<T> m, v;
};

template <class T>
struct OptimizerState {
  AdamWConfig config;
  std::uint64_t step = 0;
  std::map<std::string, Moments<T>> moments;
};

// One AdamW update of a single tensor, evaluated per element in double.
template <class T>
void adamw_update(BasicTensor<T>& p, const BasicTensor<T>& g, Moments<T>& mom, std::uint64_t step, double lr,
                  const AdamWConfig& cfg) {
  p.require_same_shape(g, "adamw_update");
  p.require_same_shape(mom.m, "adamw_update");
  p.require_same_shape(mom.v, "adamw_update");
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  const double decay = 1.0 - lr * cfg.weight_decay;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double gi = static_cast<double>(g[i]);
    const double m = cfg.beta1 * static_cast<double>(mom.m[i]) + (1.0 - cfg.beta1) * gi;
    const double v = cfg.beta2 * static_cast<double>(mom.v[i]) + (1.0 - cfg.beta2) * gi * gi;
    mom.m[i] = static_cast<T>(m);
    mom.v[i] = static_cast<T>(v);
    const double mhat = m / bc1, vhat = v / bc2;
    p[i] = static_cast<T>(static_cast<double>(p[i]) * decay - lr * mhat / (std::sqrt(vhat) + cfg.eps));
  }
}

// Updates every trainable parameter from its accumulated gradient (absent
// gradient counts as zero). Throws NonFiniteError naming the first bad gradient.
template <class T>
void optimizer_step(ParameterSet<T>& params, OptimizerState<T>& st) {
  for (const auto& e : params.entries())
    if (e.trainable && e.var.has_grad()) require_finite(e.var.node()->grad, "grad." + e.name, "optimizer_step");
  st.step += 1;
  const double lr = st.config.rate_at(st.step);
  for (auto& e : params.entries()) {
    if (!e.trainable) continue;
    auto& value = e.var.mutable_value();
    auto it = st.moments.find(e.name);
    if (it == st.moments.end())
      it = st.moments.emplace(e.name, Moments<T>{BasicTensor<T>(value.dims()), BasicTensor<T>(value.dims())}).first;
    if (it->second.m.dims() != value.dims())
      throw ShapeError("optimizer moments for '" + e.name + "' do not match the parameter shape");
    adamw_update(value, e.var.grad(), it->second, st.step, lr, st.config);
  }
}

}  // namespace invrescale
