// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "accdet/core/error.hpp"

namespace accdet {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string shape_string(const Shape& dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) os << 'x';
    os << dims[i];
  }
  os << ']';
  return os.str();
}

// Dense row-major N-d array. A default-constructed tensor is the empty
// placeholder (rank 0, no elements); every constructed tensor has extents >= 1.
template <class T = float>
class Tensor {
  static_assert(std::is_arithmetic_v<T>, "Tensor element must be arithmetic");

 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape dims, T fill = T{}) : dims_(std::move(dims)) {
    check_dims();
    data_.assign(shape_size(dims_), fill);
  }

  Tensor(Shape dims, std::vector<T> data)
      : dims_(std::move(dims)), data_(std::move(data)) {
    check_dims();
    if (data_.size() != shape_size(dims_)) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match dims " + shape_string(dims_));
    }
  }

  const Shape& dims() const noexcept { return dims_; }
  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t dim(std::size_t axis) const { return dims_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  template <class... I>
  T& at(I... idx) {
    return data_[offset(idx...)];
  }
  template <class... I>
  const T& at(I... idx) const {
    return data_[offset(idx...)];
  }

  // Same elements, new extents. Element count must match.
  Tensor reshaped(Shape dims) const& {
    Tensor out(*this);
    out.reshape(std::move(dims));
    return out;
  }
  Tensor reshaped(Shape dims) && {
    reshape(std::move(dims));
    return std::move(*this);
  }
  void reshape(Shape dims) {
    if (shape_size(dims) != data_.size()) {
      throw ShapeError("cannot reshape " + shape_string(dims_) + " to " +
                       shape_string(dims));
    }
    dims_ = std::move(dims);
    check_dims();
  }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out(dims_);
    std::transform(data_.begin(), data_.end(), out.data(),
                   [](T v) { return static_cast<U>(v); });
    return out;
  }

  bool all_finite() const {
    if constexpr (std::is_floating_point_v<T>) {
      return std::all_of(data_.begin(), data_.end(),
                         [](T v) { return std::isfinite(v); });
    } else {
      return true;
    }
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.dims_ == b.dims_ && a.data_ == b.data_;
  }

 private:
  void check_dims() const {
    for (auto d : dims_) {
      if (d == 0) throw ShapeError("tensor extent must be >= 1, got " + shape_string(dims_));
    }
  }

  template <class... I>
  std::size_t offset(I... idx) const {
    const std::size_t ix[] = {static_cast<std::size_t>(idx)...};
    if (sizeof...(I) != dims_.size()) throw ShapeError("index rank mismatch");
    std::size_t off = 0;
    for (std::size_t a = 0; a < sizeof...(I); ++a) {
      if (ix[a] >= dims_[a]) throw ShapeError("index out of range");
      off = off * dims_[a] + ix[a];
    }
    return off;
  }

  Shape dims_;
  std::vector<T> data_;
};

template <class T>
void require_finite(const Tensor<T>& t, const char* what) {
  if (!t.all_finite()) throw NumericError(std::string("non-finite values in ") + what);
}

// Trainable weight with a gradient accumulator of identical extents.
template <class T = float>
struct Parameter {
  Tensor<T> value;
  Tensor<T> grad;
  bool trainable = true;

  Parameter() = default;
  explicit Parameter(Tensor<T> v, bool is_trainable = true)
      : value(std::move(v)), grad(value.dims()), trainable(is_trainable) {}

  const Shape& dims() const noexcept { return value.dims(); }
  std::size_t size() const noexcept { return value.size(); }
  void zero_grad() { grad.fill(T{0}); }
};

// Named reference into a model's parameter set, in a stable traversal order.
template <class T>
struct NamedParameter {
  std::string name;
  Parameter<T>* param;
};

// Non-trainable named state (batch-norm running statistics).
template <class T>
struct NamedBuffer {
  std::string name;
  Tensor<T>* tensor;
};

template <class T>
Tensor<T> concat_last_axis(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != b.rank()) throw ShapeError("concat rank mismatch");
  for (std::size_t i = 0; i + 1 < a.rank(); ++i) {
    if (a.dim(i) != b.dim(i)) throw ShapeError("concat extent mismatch");
  }
  const std::size_t ca = a.dims().back(), cb = b.dims().back();
  const std::size_t rows = a.size() / ca;
  Shape dims = a.dims();
  dims.back() = ca + cb;
  Tensor<T> out(dims);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(a.data() + r * ca, ca, out.data() + r * (ca + cb));
    std::copy_n(b.data() + r * cb, cb, out.data() + r * (ca + cb) + ca);
  }
  return out;
}

// Inverse of concat_last_axis: splits off the leading `ca` channels.
template <class T>
std::pair<Tensor<T>, Tensor<T>> split_last_axis(const Tensor<T>& x, std::size_t ca) {
  const std::size_t c = x.dims().back();
  if (ca == 0 || ca >= c) throw ShapeError("split point out of range");
  const std::size_t cb = c - ca, rows = x.size() / c;
  Shape da = x.dims(), db = x.dims();
  da.back() = ca;
  db.back() = cb;
  Tensor<T> a(da), b(db);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(x.data() + r * c, ca, a.data() + r * ca);
    std::copy_n(x.data() + r * c + ca, cb, b.data() + r * cb);
  }
  return {std::move(a), std::move(b)};
}

// Slice [begin, begin+count) along axis 0.
template <class T>
Tensor<T> slice_leading(const Tensor<T>& x, std::size_t begin, std::size_t count) {
  if (x.rank() == 0 || begin + count > x.dim(0) || count == 0) {
    throw ShapeError("leading-axis slice out of range");
  }
  const std::size_t inner = x.size() / x.dim(0);
  Shape dims = x.dims();
  dims[0] = count;
  std::vector<T> data(x.data() + begin * inner, x.data() + (begin + count) * inner);
  return Tensor<T>(std::move(dims), std::move(data));
}

// Stack equally-shaped tensors along a new leading axis.
template <class T>
Tensor<T> stack(std::span<const Tensor<T>> items) {
  if (items.empty()) throw ShapeError("cannot stack zero tensors");
  Shape dims = items.front().dims();
  const std::size_t inner = items.front().size();
  dims.insert(dims.begin(), items.size());
  Tensor<T> out(dims);
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].dims() != items.front().dims()) throw ShapeError("stack extent mismatch");
    std::copy_n(items[i].data(), inner, out.data() + i * inner);
  }
  return out;
}

template <class T>
void add_into(Tensor<T>& dst, const Tensor<T>& src) {
  if (dst.dims() != src.dims()) throw ShapeError("accumulate extent mismatch");
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace accdet
