#pragma once

#include "invrescale/invnet/parameters.hpp"

namespace invrescale {

// φ of the feature loss: image (3,H,W) -> feature map.
template <class T>
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual Var<T> features(const Var<T>& image) const = 0;
};

// Seeded frozen net: three stride-2 3×3 convolutions, ReLU after the first two.
template <class T>
class FrozenRandomFeatures final : public FeatureExtractor<T> {
 public:
  explicit FrozenRandomFeatures(std::uint64_t seed, std::size_t width = 8) {
    SeededRng rng(seed);
    add_conv(params_, "features.conv1", width, 3, 3, rng, 1.0, false);
    add_conv(params_, "features.conv2", 2 * width, width, 3, rng, 1.0, false);
    add_conv(params_, "features.conv3", 2 * width, 2 * width, 3, rng, 1.0, false);
  }

  Var<T> features(const Var<T>& image) const override {
    auto h = ad::relu(apply_conv(params_, "features.conv1", image, 2, 1));
    h = ad::relu(apply_conv(params_, "features.conv2", h, 2, 1));
    return apply_conv(params_, "features.conv3", h, 2, 1);
  }

 private:
  ParameterSet<T> params_;
};

}  // namespace invrescale
