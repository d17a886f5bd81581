#pragma once

// Training objective. L_p, L_f and L_lr are root-mean-square differences, so
// their magnitude does not depend on resolution; L_sem is the Euclidean
// distance between embeddings.

#include <array>
#include <cmath>
#include <string>

#include "invrescale/imaging/resize.hpp"
#include "invrescale/refiner/teacher.hpp"
#include "invrescale/training/features.hpp"

namespace invrescale {

struct LossWeights {
  double pixel = 2.0;     // λ1
  double feature = 5.0;   // λ2
  double lr = 3.0;        // λ3
  double semantic = 3.0;  // λ4

  void validate() const {
    for (double v : {pixel, feature, lr, semantic})
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("loss weights must be finite and nonnegative");
  }
};

template <class T>
struct LossParts {
  Var<T> pixel, feature, lr, semantic;
};

// Scalar loss values of one step.
struct LossValues {
  double pixel = 0.0, feature = 0.0, lr = 0.0, semantic = 0.0, total = 0.0;
};

template <class T>
Var<T> loss_lr(const Var<T>& lr_pred, const BasicTensor<T>& x, std::size_t s_total) {
  const auto target = bicubic_downscale(x, s_total);
  if (lr_pred.dims() != target.dims())
    throw ShapeError("loss_lr: LR " + shape_string(lr_pred.dims()) + " vs expected " + shape_string(target.dims()));
  return ad::rms_diff(lr_pred, Var<T>::constant(target));
}

template <class T>
Var<T> loss_sem(const Var<T>& c_s, const BasicTensor<T>& x, const SemanticTeacher<T>& teacher) {
  const auto target = teacher.embed(x);
  if (c_s.dims() != target.dims())
    throw ShapeError("loss_sem: embedding " + shape_string(c_s.dims()) + " vs teacher " + shape_string(target.dims()));
  return ad::l2_distance(c_s, Var<T>::constant(target));
}

template <class T>
Var<T> loss_pixel(const Var<T>& x_hat, const Var<T>& x) {
  if (x_hat.dims() != x.dims())
    throw ShapeError("loss_pixel: " + shape_string(x_hat.dims()) + " vs " + shape_string(x.dims()));
  return ad::rms_diff(x_hat, x);
}

template <class T>
Var<T> loss_feat(const Var<T>& x_hat, const Var<T>& x, const FeatureExtractor<T>& fx) {
  if (x_hat.dims() != x.dims())
    throw ShapeError("loss_feat: " + shape_string(x_hat.dims()) + " vs " + shape_string(x.dims()));
  return ad::rms_diff(fx.features(x_hat), fx.features(x));
}

inline constexpr std::array<const char*, 4> kLossPartNames = {"loss.pixel", "loss.feature", "loss.lr", "loss.semantic"};

template <class T>
Var<T> loss_total(const LossParts<T>& parts, const LossWeights& w) {
  const std::array<const Var<T>*, 4> ps = {&parts.pixel, &parts.feature, &parts.lr, &parts.semantic};
  for (std::size_t i = 0; i < ps.size(); ++i) require_finite(ps[i]->value(), kLossPartNames[i], "loss_total");
  return ad::weighted_sum<T>({parts.pixel, parts.feature, parts.lr, parts.semantic},
                             {static_cast<T>(w.pixel), static_cast<T>(w.feature), static_cast<T>(w.lr),
                              static_cast<T>(w.semantic)});
}

inline double loss_total(const LossValues& v, const LossWeights& w) {
  for (double p : {v.pixel, v.feature, v.lr, v.semantic})
    if (!std::isfinite(p)) throw NonFiniteError("loss part", "loss_total");
  return w.pixel * v.pixel + w.feature * v.feature + w.lr * v.lr + w.semantic * v.semantic;
}

}  // namespace invrescale
