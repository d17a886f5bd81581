#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "invrescale/errors.hpp"

namespace invrescale {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(const Shape& dims) {
  std::string s = "(";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(dims[i]);
  }
  return s + ")";
}

// Dense row-major array. Extents are always positive; a scalar is shape {1}.
template <class T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;

  explicit BasicTensor(Shape dims, T fill = T{0}) : dims_(std::move(dims)) {
    for (auto d : dims_)
      if (d == 0) throw ShapeError("tensor extents must be positive: " + shape_string(dims_));
    data_.assign(shape_size(dims_), fill);
  }

  BasicTensor(Shape dims, std::vector<T> data) : dims_(std::move(dims)), data_(std::move(data)) {
    for (auto d : dims_)
      if (d == 0) throw ShapeError("tensor extents must be positive: " + shape_string(dims_));
    if (shape_size(dims_) != data_.size())
      throw ShapeError("data length " + std::to_string(data_.size()) + " does not match shape " +
                       shape_string(dims_));
  }

  static BasicTensor scalar(T v) { return BasicTensor({1}, std::vector<T>{v}); }

  static BasicTensor identity(std::size_t n) {
    BasicTensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t(i, i) = T{1};
    return t;
  }

  const Shape& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t dim(std::size_t i) const { return dims_.at(i); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  T& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * dims_[1] + j]; }
  const T& operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * dims_[1] + j]; }
  T& operator()(std::size_t c, std::size_t i, std::size_t j) noexcept {
    return data_[(c * dims_[1] + i) * dims_[2] + j];
  }
  const T& operator()(std::size_t c, std::size_t i, std::size_t j) const noexcept {
    return data_[(c * dims_[1] + i) * dims_[2] + j];
  }

  // Same data, new extents.
  BasicTensor reshaped(Shape dims) const {
    if (shape_size(dims) != data_.size())
      throw ShapeError("cannot reshape " + shape_string(dims_) + " to " + shape_string(dims));
    return BasicTensor(std::move(dims), data_);
  }

  template <class U>
  BasicTensor<U> cast() const {
    std::vector<U> out(data_.size());
    std::transform(data_.begin(), data_.end(), out.begin(), [](T v) { return static_cast<U>(v); });
    return BasicTensor<U>(dims_, std::move(out));
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  BasicTensor& operator+=(const BasicTensor& o) {
    require_same_shape(o, "+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  BasicTensor& operator-=(const BasicTensor& o) {
    require_same_shape(o, "-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  BasicTensor& operator*=(T s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  friend BasicTensor operator+(BasicTensor a, const BasicTensor& b) { return a += b; }
  friend BasicTensor operator-(BasicTensor a, const BasicTensor& b) { return a -= b; }
  friend BasicTensor operator*(BasicTensor a, T s) { return a *= s; }

  bool operator==(const BasicTensor& o) const = default;

  void require_same_shape(const BasicTensor& o, const char* what) const {
    if (dims_ != o.dims_)
      throw ShapeError(std::string(what) + ": shape mismatch " + shape_string(dims_) + " vs " +
                       shape_string(o.dims_));
  }

 private:
  Shape dims_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<float>;

template <class T>
void require_finite(const BasicTensor<T>& t, const std::string& name, const std::string& context) {
  if (!t.all_finite()) throw NonFiniteError(name, context);
}

template <class T>
double max_abs(const BasicTensor<T>& t) {
  double m = 0.0;
  for (T v : t.values()) m = std::max(m, std::abs(static_cast<double>(v)));
  return m;
}

template <class T, class U>
double max_abs_diff(const BasicTensor<T>& a, const BasicTensor<U>& b) {
  if (a.dims() != b.dims())
    throw ShapeError("max_abs_diff: shape mismatch " + shape_string(a.dims()) + " vs " +
                     shape_string(b.dims()));
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  return m;
}

template <class T>
double l2_norm(const BasicTensor<T>& t) {
  double s = 0.0;
  for (T v : t.values()) s += static_cast<double>(v) * static_cast<double>(v);
  return std::sqrt(s);
}

template <class T>
BasicTensor<T> transpose(const BasicTensor<T>& m) {
  if (m.rank() != 2) throw ShapeError("transpose expects a rank-2 tensor");
  BasicTensor<T> out({m.dim(1), m.dim(0)});
  for (std::size_t i = 0; i < m.dim(0); ++i)
    for (std::size_t j = 0; j < m.dim(1); ++j) out(j, i) = m(i, j);
  return out;
}

}  // namespace invrescale
