// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "accdet/core/tensor.hpp"

namespace accdet {

// y_j = sum_i x_i * W_ij + b_j for x of length n, W n x m, b of length m.
template <class T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& weights, const Tensor<T>& bias) {
  if (x.rank() != 1 || weights.rank() != 2 || bias.rank() != 1) {
    throw ShapeError("dense expects vector x, matrix W, vector b");
  }
  const std::size_t n = weights.dim(0), m = weights.dim(1);
  if (x.size() != n || bias.size() != m) {
    throw ShapeError("dense dimension mismatch: x " + shape_string(x.dims()) + ", W " +
                     shape_string(weights.dims()) + ", b " + shape_string(bias.dims()));
  }
  Tensor<T> y(bias);
  for (std::size_t i = 0; i < n; ++i) {
    const T xi = x[i];
    const T* row = weights.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) y[j] += xi * row[j];
  }
  return y;
}

template <class T>
Tensor<T> dense(const Tensor<T>& x, const Parameter<T>& weights, const Parameter<T>& bias) {
  return dense(x, weights.value, bias.value);
}

// Accumulates parameter gradients (when trainable) and returns dL/dx.
template <class T>
Tensor<T> dense_backward(const Tensor<T>& x, Parameter<T>& weights, Parameter<T>& bias,
                         const Tensor<T>& grad_out) {
  const std::size_t n = weights.value.dim(0), m = weights.value.dim(1);
  if (x.size() != n || grad_out.size() != m) throw ShapeError("dense_backward dimension mismatch");
  Tensor<T> dx({n});
  for (std::size_t i = 0; i < n; ++i) {
    const T* row = weights.value.data() + i * m;
    T acc{0};
    for (std::size_t j = 0; j < m; ++j) acc += row[j] * grad_out[j];
    dx[i] = acc;
  }
  if (weights.trainable) {
    for (std::size_t i = 0; i < n; ++i) {
      T* grow = weights.grad.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) grow[j] += x[i] * grad_out[j];
    }
  }
  if (bias.trainable) {
    for (std::size_t j = 0; j < m; ++j) bias.grad[j] += grad_out[j];
  }
  return dx;
}

}  // namespace accdet
