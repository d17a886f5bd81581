#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "invrescale/numerics/autograd.hpp"
#include "invrescale/numerics/rng.hpp"

namespace invrescale {

// Ordered, named collection of model tensors. Every entry is a gradient leaf;
// entries marked frozen are stored and checkpointed but never updated.
template <class T>
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    Var<T> var;
    bool trainable = true;
  };

  Var<T>& add(const std::string& name, BasicTensor<T> value, bool trainable = true) {
    if (index_.count(name)) throw ConfigError("duplicate parameter '" + name + "'");
    index_[name] = entries_.size();
    auto var = Var<T>::leaf(std::move(value));
    var.set_requires_grad(trainable);
    entries_.push_back({name, std::move(var), trainable});
    return entries_.back().var;
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  const Var<T>& get(const std::string& name) const { return entries_.at(lookup(name)).var; }
  Var<T>& get(const std::string& name) { return entries_.at(lookup(name)).var; }
  const Entry& entry(const std::string& name) const { return entries_.at(lookup(name)); }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& e : entries_) out.push_back(e.name);
    return out;
  }

  void set_trainable(const std::string& name, bool on) {
    auto& e = entries_.at(lookup(name));
    e.trainable = on;
    e.var.set_requires_grad(on);
  }

  // Restricts training to names accepted by pred.
  template <class Pred>
  void train_only(Pred pred) {
    for (auto& e : entries_) {
      e.trainable = pred(e.name);
      e.var.set_requires_grad(e.trainable);
    }
  }

  void zero_grad() {
    for (auto& e : entries_) e.var.zero_grad();
  }

  std::size_t count_scalars(bool trainable_only = false) const {
    std::size_t n = 0;
    for (const auto& e : entries_)
      if (!trainable_only || e.trainable) n += e.var.value().size();
    return n;
  }

  // Copies values (and trainable flags) from another precision.
  template <class U>
  void assign_from(const ParameterSet<U>& other) {
    for (const auto& e : other.entries()) {
      auto& mine = entries_.at(lookup(e.name));
      mine.var.mutable_value() = e.var.value().template cast<T>();
      mine.trainable = e.trainable;
      mine.var.set_requires_grad(e.trainable);
    }
  }

 private:
  std::size_t lookup(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
  }

  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

// He-uniform initialisation, optionally damped for output layers.
template <class T>
BasicTensor<T> he_uniform(Shape dims, std::size_t fan_in, SeededRng& rng, double gain = 1.0) {
  const double bound = gain * std::sqrt(6.0 / static_cast<double>(fan_in));
  return uniform_tensor<T>(std::move(dims), -bound, bound, rng);
}

// Registers a K×K convolution "<prefix>.w" (O,I,K,K) and "<prefix>.b" (O).
template <class T>
void add_conv(ParameterSet<T>& params, const std::string& prefix, std::size_t out_c, std::size_t in_c,
              std::size_t k, SeededRng& rng, double gain = 1.0, bool trainable = true) {
  params.add(prefix + ".w", he_uniform<T>({out_c, in_c, k, k}, in_c * k * k, rng, gain), trainable);
  params.add(prefix + ".b", BasicTensor<T>({out_c}), trainable);
}

template <class T>
void add_linear(ParameterSet<T>& params, const std::string& prefix, std::size_t out_f, std::size_t in_f,
                SeededRng& rng, double gain = 1.0, bool trainable = true) {
  params.add(prefix + ".w", he_uniform<T>({out_f, in_f}, in_f, rng, gain), trainable);
  params.add(prefix + ".b", BasicTensor<T>({out_f}), trainable);
}

template <class T>
Var<T> apply_conv(const ParameterSet<T>& params, const std::string& prefix, const Var<T>& x,
                  std::size_t stride = 1, std::size_t pad = 1) {
  return ad::conv2d(x, params.get(prefix + ".w"), params.get(prefix + ".b"), stride, pad);
}

template <class T>
Var<T> apply_linear(const ParameterSet<T>& params, const std::string& prefix, const Var<T>& x) {
  return ad::linear(x, params.get(prefix + ".w"), params.get(prefix + ".b"));
}

}  // namespace invrescale
