#pragma once

// Minimal reverse-mode tape over whole tensors. Every differentiable
// operation records a closure that maps the output gradient to input
// gradients; backward() replays the closures in reverse topological order.
// When no input requires a gradient nothing is recorded, so the same code
// path serves inference.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "invrescale/numerics/kernels.hpp"
#include "invrescale/numerics/tensor.hpp"

namespace invrescale {

template <class T>
struct Node {
  BasicTensor<T> value;
  BasicTensor<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(const BasicTensor<T>&)> backward;

  void accumulate(const BasicTensor<T>& g) {
    if (!requires_grad) return;
    if (grad.empty())
      grad = g;
    else
      grad += g;
  }
  void accumulate(BasicTensor<T>&& g) {
    if (!requires_grad) return;
    if (grad.empty())
      grad = std::move(g);
    else
      grad += g;
  }
};

template <class T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Var constant(BasicTensor<T> value) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    return Var(std::move(n));
  }

  // A leaf that accumulates gradients across backward passes.
  static Var leaf(BasicTensor<T> value) {
    auto n = std::make_shared<Node<T>>();
    n->value = std::move(value);
    n->requires_grad = true;
    return Var(std::move(n));
  }

  bool valid() const noexcept { return static_cast<bool>(node_); }
  const BasicTensor<T>& value() const { return node_->value; }
  BasicTensor<T>& mutable_value() { return node_->value; }
  const Shape& dims() const { return node_->value.dims(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }

  // Gradient after backward(); zeros when nothing reached this node.
  BasicTensor<T> grad() const {
    if (node_->grad.empty()) return BasicTensor<T>(node_->value.dims());
    return node_->grad;
  }
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad() { node_->grad = BasicTensor<T>(); }

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& shared() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

namespace ad {

inline bool& grad_mode() {
  thread_local bool enabled = true;
  return enabled;
}

// Disables recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(grad_mode()) { grad_mode() = false; }
  ~NoGradGuard() { grad_mode() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <class T, class Backward>
Var<T> record(BasicTensor<T> value, std::initializer_list<Var<T>> inputs, Backward&& backward) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  if (!grad_mode()) return Var<T>(std::move(n));
  for (const auto& in : inputs)
    if (in.requires_grad()) n->requires_grad = true;
  if (n->requires_grad) {
    for (const auto& in : inputs)
      if (in.requires_grad()) n->parents.push_back(in.shared());
    n->backward = std::forward<Backward>(backward);
  }
  return Var<T>(std::move(n));
}

// Reverse sweep from a scalar (or any) root; the root gradient is `seed`
// broadcast over its elements. Intermediate gradients are released once
// consumed; leaf gradients accumulate.
template <class T>
void backward(const Var<T>& root, T seed = T{1}) {
  if (!root.requires_grad()) return;
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{root.node(), 0}};
  seen.insert(root.node());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node<T>* p = n->parents[next++].get();
      if (seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  root.node()->accumulate(BasicTensor<T>(root.dims(), seed));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (!n->backward || n->grad.empty()) continue;
    n->backward(n->grad);
    n->grad = BasicTensor<T>();
  }
}

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  a.value().require_same_shape(b.value(), "add");
  return record(a.value() + b.value(), {a, b}, [a, b](const BasicTensor<T>& g) {
    a.node()->accumulate(g);
    b.node()->accumulate(g);
  });
}

template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  a.value().require_same_shape(b.value(), "sub");
  return record(a.value() - b.value(), {a, b}, [a, b](const BasicTensor<T>& g) {
    a.node()->accumulate(g);
    if (b.requires_grad()) b.node()->accumulate(g * T{-1});
  });
}

template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  a.value().require_same_shape(b.value(), "mul");
  BasicTensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return record(std::move(out), {a, b}, [a, b](const BasicTensor<T>& g) {
    if (a.requires_grad()) {
      BasicTensor<T> ga = g;
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= b.value()[i];
      a.node()->accumulate(std::move(ga));
    }
    if (b.requires_grad()) {
      BasicTensor<T> gb = g;
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] *= a.value()[i];
      b.node()->accumulate(std::move(gb));
    }
  });
}

template <class T>
Var<T> scale(const Var<T>& a, T s) {
  return record(a.value() * s, {a}, [a, s](const BasicTensor<T>& g) { a.node()->accumulate(g * s); });
}

template <class T>
Var<T> relu(const Var<T>& a) {
  BasicTensor<T> out = a.value();
  for (auto& v : out.values()) v = v > T{0} ? v : T{0};
  return record(std::move(out), {a}, [a](const BasicTensor<T>& g) {
    BasicTensor<T> ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i)
      if (!(a.value()[i] > T{0})) ga[i] = T{0};
    a.node()->accumulate(std::move(ga));
  });
}

template <class T>
Var<T> tanh(const Var<T>& a) {
  BasicTensor<T> out = a.value();
  for (auto& v : out.values()) v = std::tanh(v);
  auto y = std::make_shared<BasicTensor<T>>(out);
  return record(std::move(out), {a}, [a, y](const BasicTensor<T>& g) {
    BasicTensor<T> ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= T{1} - (*y)[i] * (*y)[i];
    a.node()->accumulate(std::move(ga));
  });
}

template <class T>
Var<T> exp(const Var<T>& a) {
  BasicTensor<T> out = a.value();
  for (auto& v : out.values()) v = std::exp(v);
  auto y = std::make_shared<BasicTensor<T>>(out);
  return record(std::move(out), {a}, [a, y](const BasicTensor<T>& g) {
    BasicTensor<T> ga = g;
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= (*y)[i];
    a.node()->accumulate(std::move(ga));
  });
}

// Channel concatenation of (Ca,H,W) and (Cb,H,W).
template <class T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.rank() != 3 || bv.rank() != 3 || av.dim(1) != bv.dim(1) || av.dim(2) != bv.dim(2))
    throw ShapeError("concat_channels: incompatible " + shape_string(av.dims()) + " and " +
                     shape_string(bv.dims()));
  BasicTensor<T> out({av.dim(0) + bv.dim(0), av.dim(1), av.dim(2)});
  std::copy(av.values().begin(), av.values().end(), out.data());
  std::copy(bv.values().begin(), bv.values().end(), out.data() + av.size());
  return record(std::move(out), {a, b}, [a, b](const BasicTensor<T>& g) {
    const std::size_t split = a.value().size();
    if (a.requires_grad())
      a.node()->accumulate(BasicTensor<T>(a.dims(), std::vector<T>(g.data(), g.data() + split)));
    if (b.requires_grad())
      b.node()->accumulate(BasicTensor<T>(b.dims(), std::vector<T>(g.data() + split, g.data() + g.size())));
  });
}

// Channels [begin, end) of a (C,H,W) tensor.
template <class T>
Var<T> slice_channels(const Var<T>& a, std::size_t begin, std::size_t end) {
  const auto& av = a.value();
  if (av.rank() != 3 || begin >= end || end > av.dim(0))
    throw ShapeError("slice_channels: bad range [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") for " + shape_string(av.dims()));
  const std::size_t plane = av.dim(1) * av.dim(2);
  BasicTensor<T> out({end - begin, av.dim(1), av.dim(2)},
                     std::vector<T>(av.data() + begin * plane, av.data() + end * plane));
  return record(std::move(out), {a}, [a, begin, plane](const BasicTensor<T>& g) {
    BasicTensor<T> ga(a.dims());
    std::copy(g.values().begin(), g.values().end(), ga.data() + begin * plane);
    a.node()->accumulate(std::move(ga));
  });
}

// 2-D convolution: x (I,H,W), w (O,I,K,K), b (O).
template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, std::size_t stride = 1, std::size_t pad = 1) {
  const auto& xv = x.value();
  const auto& wv = w.value();
  if (xv.rank() != 3 || wv.rank() != 4 || wv.dim(1) != xv.dim(0) || wv.dim(2) != wv.dim(3) ||
      b.value().size() != wv.dim(0))
    throw ShapeError("conv2d: input " + shape_string(xv.dims()) + " incompatible with weight " +
                     shape_string(wv.dims()));
  const auto geo = kernels::ConvGeometry::make(xv.dim(0), xv.dim(1), xv.dim(2), wv.dim(2), stride, pad);
  const std::size_t out_c = wv.dim(0);
  const std::size_t hw = geo.col_cols();

  BasicTensor<T> out({out_c, geo.out_h, geo.out_w});
  for (std::size_t o = 0; o < out_c; ++o) std::fill(out.data() + o * hw, out.data() + (o + 1) * hw, b.value()[o]);
  if (wv.dim(2) == 1 && stride == 1 && pad == 0) {
    kernels::gemm_acc(wv.data(), xv.data(), out.data(), out_c, geo.col_rows(), hw);
  } else {
    std::vector<T> col(geo.col_rows() * hw);
    kernels::im2col(xv.data(), geo, col.data());
    kernels::gemm_acc(wv.data(), col.data(), out.data(), out_c, geo.col_rows(), hw);
  }

  return record(std::move(out), {x, w, b}, [x, w, b, geo, out_c, hw](const BasicTensor<T>& g) {
    const bool pointwise = geo.kernel == 1 && geo.stride == 1 && geo.pad == 0;
    std::vector<T> col;
    const T* col_ptr = x.value().data();
    if (!pointwise && w.requires_grad()) {
      col.resize(geo.col_rows() * hw);
      kernels::im2col(x.value().data(), geo, col.data());
      col_ptr = col.data();
    }
    if (w.requires_grad()) {
      BasicTensor<T> gw(w.dims());
      kernels::gemm_a_bt_acc(g.data(), col_ptr, gw.data(), out_c, geo.col_rows(), hw);
      w.node()->accumulate(std::move(gw));
    }
    if (b.requires_grad()) {
      BasicTensor<T> gb(b.dims());
      for (std::size_t o = 0; o < out_c; ++o) {
        T s{0};
        for (std::size_t j = 0; j < hw; ++j) s += g[o * hw + j];
        gb[o] = s;
      }
      b.node()->accumulate(std::move(gb));
    }
    if (x.requires_grad()) {
      BasicTensor<T> gx(x.dims());
      if (pointwise) {
        kernels::gemm_at_b_acc(w.value().data(), g.data(), gx.data(), out_c, geo.col_rows(), hw);
      } else {
        std::vector<T> gcol(geo.col_rows() * hw, T{0});
        kernels::gemm_at_b_acc(w.value().data(), g.data(), gcol.data(), out_c, geo.col_rows(), hw);
        kernels::col2im_acc(gcol.data(), geo, gx.data());
      }
      x.node()->accumulate(std::move(gx));
    }
  });
}

// Fully connected layer on a vector: W (O,I), b (O), v (I).
template <class T>
Var<T> linear(const Var<T>& v, const Var<T>& w, const Var<T>& b) {
  const auto& wv = w.value();
  if (wv.rank() != 2 || v.value().size() != wv.dim(1) || b.value().size() != wv.dim(0))
    throw ShapeError("linear: weight " + shape_string(wv.dims()) + " incompatible with input " +
                     shape_string(v.dims()));
  const std::size_t o = wv.dim(0), in = wv.dim(1);
  BasicTensor<T> out = b.value().reshaped({o});
  kernels::gemm_acc(wv.data(), v.value().data(), out.data(), o, in, 1);
  return record(std::move(out), {v, w, b}, [v, w, b, o, in](const BasicTensor<T>& g) {
    if (w.requires_grad()) {
      BasicTensor<T> gw(w.dims());
      for (std::size_t i = 0; i < o; ++i)
        for (std::size_t j = 0; j < in; ++j) gw[i * in + j] = g[i] * v.value()[j];
      w.node()->accumulate(std::move(gw));
    }
    if (b.requires_grad()) b.node()->accumulate(g.reshaped(b.dims()));
    if (v.requires_grad()) {
      BasicTensor<T> gv(v.dims());
      kernels::gemm_at_b_acc(w.value().data(), g.data(), gv.data(), o, in, 1);
      v.node()->accumulate(std::move(gv));
    }
  });
}

// Mean over the spatial extent: (C,H,W) -> (C). Values are summed in sorted
// order, so the result is exactly invariant to any permutation of pixels.
template <class T>
Var<T> global_avg_pool(const Var<T>& x) {
  const auto& xv = x.value();
  if (xv.rank() != 3) throw ShapeError("global_avg_pool expects (C,H,W)");
  const std::size_t c = xv.dim(0), plane = xv.dim(1) * xv.dim(2);
  BasicTensor<T> out({c});
  std::vector<T> sorted(plane);
  for (std::size_t k = 0; k < c; ++k) {
    std::copy(xv.data() + k * plane, xv.data() + (k + 1) * plane, sorted.begin());
    std::sort(sorted.begin(), sorted.end());
    double s = 0.0;
    for (const T v : sorted) s += static_cast<double>(v);
    out[k] = static_cast<T>(s / static_cast<double>(plane));
  }
  return record(std::move(out), {x}, [x, c, plane](const BasicTensor<T>& g) {
    BasicTensor<T> gx(x.dims());
    for (std::size_t k = 0; k < c; ++k) {
      const T v = g[k] / static_cast<T>(plane);
      std::fill(gx.data() + k * plane, gx.data() + (k + 1) * plane, v);
    }
    x.node()->accumulate(std::move(gx));
  });
}

// Feature-wise modulation: out[c] = x[c] · (1 + gamma[c]) + beta[c].
template <class T>
Var<T> film(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta) {
  const auto& xv = x.value();
  if (xv.rank() != 3 || gamma.value().size() != xv.dim(0) || beta.value().size() != xv.dim(0))
    throw ShapeError("film: modulation size does not match channels of " + shape_string(xv.dims()));
  const std::size_t c = xv.dim(0), plane = xv.dim(1) * xv.dim(2);
  BasicTensor<T> out = xv;
  for (std::size_t k = 0; k < c; ++k) {
    const T s = T{1} + gamma.value()[k], t = beta.value()[k];
    for (std::size_t j = 0; j < plane; ++j) out[k * plane + j] = out[k * plane + j] * s + t;
  }
  return record(std::move(out), {x, gamma, beta}, [x, gamma, beta, c, plane](const BasicTensor<T>& g) {
    if (x.requires_grad()) {
      BasicTensor<T> gx = g;
      for (std::size_t k = 0; k < c; ++k) {
        const T s = T{1} + gamma.value()[k];
        for (std::size_t j = 0; j < plane; ++j) gx[k * plane + j] *= s;
      }
      x.node()->accumulate(std::move(gx));
    }
    if (gamma.requires_grad() || beta.requires_grad()) {
      BasicTensor<T> gg(gamma.dims()), gb(beta.dims());
      for (std::size_t k = 0; k < c; ++k) {
        T sg{0}, sb{0};
        for (std::size_t j = 0; j < plane; ++j) {
          sg += g[k * plane + j] * x.value()[k * plane + j];
          sb += g[k * plane + j];
        }
        gg[k] = sg;
        gb[k] = sb;
      }
      gamma.node()->accumulate(std::move(gg));
      beta.node()->accumulate(std::move(gb));
    }
  });
}

// sqrt(mean((a − b)²)); zero difference yields a zero subgradient.
template <class T>
Var<T> rms_diff(const Var<T>& a, const Var<T>& b) {
  a.value().require_same_shape(b.value(), "rms_diff");
  const std::size_t n = a.value().size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(a.value()[i]) - static_cast<double>(b.value()[i]);
    s += d * d;
  }
  const double rms = std::sqrt(s / static_cast<double>(n));
  return record(BasicTensor<T>::scalar(static_cast<T>(rms)), {a, b}, [a, b, n, rms](const BasicTensor<T>& g) {
    if (rms == 0.0) return;
    const T k = static_cast<T>(static_cast<double>(g[0]) / (static_cast<double>(n) * rms));
    BasicTensor<T> d = a.value() - b.value();
    d *= k;
    if (b.requires_grad()) b.node()->accumulate(d * T{-1});
    a.node()->accumulate(std::move(d));
  });
}

// Euclidean distance sqrt(sum((a − b)²)).
template <class T>
Var<T> l2_distance(const Var<T>& a, const Var<T>& b) {
  a.value().require_same_shape(b.value(), "l2_distance");
  double s = 0.0;
  for (std::size_t i = 0; i < a.value().size(); ++i) {
    const double d = static_cast<double>(a.value()[i]) - static_cast<double>(b.value()[i]);
    s += d * d;
  }
  const double norm = std::sqrt(s);
  return record(BasicTensor<T>::scalar(static_cast<T>(norm)), {a, b}, [a, b, norm](const BasicTensor<T>& g) {
    if (norm == 0.0) return;
    BasicTensor<T> d = a.value() - b.value();
    d *= static_cast<T>(static_cast<double>(g[0]) / norm);
    if (b.requires_grad()) b.node()->accumulate(d * T{-1});
    a.node()->accumulate(std::move(d));
  });
}

// Σ_i weights[i] · parts[i] over scalar parts.
template <class T>
Var<T> weighted_sum(const std::vector<Var<T>>& parts, const std::vector<T>& weights) {
  if (parts.size() != weights.size()) throw ShapeError("weighted_sum: parts and weights differ in length");
  auto acc = Var<T>::constant(BasicTensor<T>::scalar(T{0}));
  for (std::size_t i = 0; i < parts.size(); ++i) acc = add(acc, scale(parts[i], weights[i]));
  return acc;
}

// Σ_i r_i · a_i against a constant weight tensor; used to reduce tensors to
// smooth scalars for gradient checks.
template <class T>
Var<T> dot_constant(const Var<T>& a, const BasicTensor<T>& r) {
  a.value().require_same_shape(r, "dot_constant");
  double s = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) s += static_cast<double>(a.value()[i]) * static_cast<double>(r[i]);
  return record(BasicTensor<T>::scalar(static_cast<T>(s)), {a},
                [a, r](const BasicTensor<T>& g) { a.node()->accumulate(r * g[0]); });
}

}  // namespace ad
}  // namespace invrescale
