#pragma once

// Pixel semantic embedder: per-pixel 1×1 projection (ReLU), global average
// pool, then three fully connected layers with ReLU between them. The pool
// makes the embedding independent of the LR extent and of pixel order.

#include "invrescale/invnet/parameters.hpp"

namespace invrescale {

struct PixelSemanticEmbedder {
  std::size_t in_channels = 3;
  std::size_t hidden = 32;  // D_h
  std::size_t dim = 64;     // D

  template <class T>
  void add_parameters(ParameterSet<T>& params, SeededRng& rng) const {
    add_conv(params, "pse.proj", hidden, in_channels, 1, rng);
    add_linear(params, "pse.fc1", hidden, hidden, rng);
    add_linear(params, "pse.fc2", hidden, hidden, rng);
    add_linear(params, "pse.fc3", dim, hidden, rng);
  }
};

template <class T>
Var<T> pse_forward(const ParameterSet<T>& params, const Var<T>& lr) {
  auto h = ad::relu(apply_conv(params, "pse.proj", lr, 1, 0));
  auto v = ad::global_avg_pool(h);
  v = ad::relu(apply_linear(params, "pse.fc1", v));
  v = ad::relu(apply_linear(params, "pse.fc2", v));
  return apply_linear(params, "pse.fc3", v);
}

}  // namespace invrescale
