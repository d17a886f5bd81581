#pragma once

// Invertible coupling block. The input splits into a (first n_a channels, the
// LR branch) and b (the rest):
//   a' = a + φ(b)
//   b' = b ⊙ exp(α·tanh(ρ(a'))) + η(a')
// and inverts in closed form:
//   b = (b' − η(a')) ⊙ exp(−α·tanh(ρ(a')))
//   a = a' − φ(b)
// φ, ρ, η are each conv3×3 → ReLU → conv3×3.

#include <string>

#include "invrescale/invnet/parameters.hpp"

namespace invrescale {

struct CouplingBlock {
  std::string prefix;          // parameter name prefix, e.g. "block0"
  std::size_t split_a = 3;     // LR-branch channels
  std::size_t split_b = 0;     // remaining channels
  std::size_t hidden = 32;
  double clamp = 1.0;          // α

  std::size_t channels() const { return split_a + split_b; }
};

namespace detail {

inline constexpr const char* kSubnets[3] = {"phi", "rho", "eta"};

template <class T>
Var<T> subnet(const ParameterSet<T>& params, const std::string& prefix, const Var<T>& x) {
  auto h = ad::relu(apply_conv(params, prefix + ".conv1", x));
  return apply_conv(params, prefix + ".conv2", h);
}

template <class T>
void check_coupling_input(const CouplingBlock& blk, const BasicTensor<T>& x, const char* what) {
  if (x.rank() != 3 || x.dim(0) != blk.channels())
    throw ShapeError(std::string(what) + ": expected " + std::to_string(blk.channels()) + " channels, got " +
                     shape_string(x.dims()));
}

}  // namespace detail

// Registers φ/ρ/η. `output_gain` damps the last convolution of each subnet;
// 0 gives the exact identity block.
template <class T>
void add_coupling_parameters(ParameterSet<T>& params, const CouplingBlock& blk, SeededRng& rng,
                             double output_gain = 0.1) {
  const std::size_t a = blk.split_a, b = blk.split_b, h = blk.hidden;
  add_conv(params, blk.prefix + ".phi.conv1", h, b, 3, rng);
  add_conv(params, blk.prefix + ".phi.conv2", a, h, 3, rng, output_gain);
  add_conv(params, blk.prefix + ".rho.conv1", h, a, 3, rng);
  add_conv(params, blk.prefix + ".rho.conv2", b, h, 3, rng, output_gain);
  add_conv(params, blk.prefix + ".eta.conv1", h, a, 3, rng);
  add_conv(params, blk.prefix + ".eta.conv2", b, h, 3, rng, output_gain);
}

// α·tanh(ρ(a')): the log of the affine scale, bounded by ±α.
template <class T>
Var<T> coupling_log_scale(const ParameterSet<T>& params, const CouplingBlock& blk, const Var<T>& a_out) {
  return ad::scale(ad::tanh(detail::subnet(params, blk.prefix + ".rho", a_out)), static_cast<T>(blk.clamp));
}

template <class T>
Var<T> coupling_forward(const ParameterSet<T>& params, const CouplingBlock& blk, const Var<T>& x) {
  detail::check_coupling_input(blk, x.value(), "coupling_forward");
  auto a = ad::slice_channels(x, 0, blk.split_a);
  auto b = ad::slice_channels(x, blk.split_a, blk.channels());
  auto a_out = ad::add(a, detail::subnet(params, blk.prefix + ".phi", b));
  auto log_s = coupling_log_scale(params, blk, a_out);
  auto b_out = ad::add(ad::mul(b, ad::exp(log_s)), detail::subnet(params, blk.prefix + ".eta", a_out));
  return ad::concat_channels(a_out, b_out);
}

template <class T>
Var<T> coupling_inverse(const ParameterSet<T>& params, const CouplingBlock& blk, const Var<T>& y) {
  detail::check_coupling_input(blk, y.value(), "coupling_inverse");
  auto a_out = ad::slice_channels(y, 0, blk.split_a);
  auto b_out = ad::slice_channels(y, blk.split_a, blk.channels());
  auto log_s = coupling_log_scale(params, blk, a_out);
  auto b = ad::mul(ad::sub(b_out, detail::subnet(params, blk.prefix + ".eta", a_out)),
                   ad::exp(ad::scale(log_s, T{-1})));
  auto a = ad::sub(a_out, detail::subnet(params, blk.prefix + ".phi", b));
  return ad::concat_channels(a, b);
}

template <class T>
BasicTensor<T> coupling_forward(const ParameterSet<T>& params, const CouplingBlock& blk, const BasicTensor<T>& x) {
  ad::NoGradGuard no_grad;
  return coupling_forward(params, blk, Var<T>::constant(x)).value();
}

template <class T>
BasicTensor<T> coupling_inverse(const ParameterSet<T>& params, const CouplingBlock& blk, const BasicTensor<T>& y) {
  ad::NoGradGuard no_grad;
  return coupling_inverse(params, blk, Var<T>::constant(y)).value();
}

}  // namespace invrescale
