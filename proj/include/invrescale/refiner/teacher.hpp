#pragma once

#include <cmath>
#include <memory>

#include "invrescale/invnet/parameters.hpp"

namespace invrescale {

// Produces the target embedding for the semantic alignment loss.
template <class T>
class SemanticTeacher {
 public:
  virtual ~SemanticTeacher() = default;
  virtual std::size_t dim() const = 0;
  virtual BasicTensor<T> embed(const BasicTensor<T>& image) const = 0;
};

// Frozen seeded network: two stride-2 convolutions with ReLU, global pool and
// a fixed random projection to `dim`.
template <class T>
class FrozenRandomTeacher final : public SemanticTeacher<T> {
 public:
  FrozenRandomTeacher(std::uint64_t seed, std::size_t dim, std::size_t width = 16) : dim_(dim) {
    SeededRng rng(seed);
    add_conv(params_, "teacher.conv1", width, 3, 3, rng, 1.0, false);
    add_conv(params_, "teacher.conv2", 2 * width, width, 3, rng, 1.0, false);
    params_.add("teacher.proj.w", normal_tensor<T>({dim, 2 * width}, 1.0 / std::sqrt(2.0 * width), rng), false);
    params_.add("teacher.proj.b", BasicTensor<T>({dim}), false);
  }

  std::size_t dim() const override { return dim_; }

  BasicTensor<T> embed(const BasicTensor<T>& image) const override {
    ad::NoGradGuard no_grad;
    auto x = Var<T>::constant(image);
    auto h = ad::relu(apply_conv(params_, "teacher.conv1", x, 2, 1));
    h = ad::relu(apply_conv(params_, "teacher.conv2", h, 2, 1));
    return apply_linear(params_, "teacher.proj", ad::global_avg_pool(h)).value();
  }

 private:
  std::size_t dim_;
  ParameterSet<T> params_;
};

}  // namespace invrescale
