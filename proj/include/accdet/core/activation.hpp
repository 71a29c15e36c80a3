// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

#include "accdet/core/tensor.hpp"

namespace accdet {

enum class Activation { sigmoid, tanh, relu };

template <class T>
T sigmoid(T x) {
  if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

template <class T>
T activate(T x, Activation kind) {
  switch (kind) {
    case Activation::sigmoid: return sigmoid(x);
    case Activation::tanh: return std::tanh(x);
    case Activation::relu: return x > T{0} ? x : T{0};
  }
  return x;
}

// Derivative expressed through the activation's output y.
template <class T>
T activate_derivative(T y, Activation kind) {
  switch (kind) {
    case Activation::sigmoid: return y * (T{1} - y);
    case Activation::tanh: return T{1} - y * y;
    case Activation::relu: return y > T{0} ? T{1} : T{0};
  }
  return T{1};
}

template <class T>
Tensor<T> activate(Tensor<T> x, Activation kind) {
  for (auto& v : x.values()) v = activate(v, kind);
  return x;
}

template <class T>
Tensor<T> activation_backward(const Tensor<T>& output, const Tensor<T>& grad_out, Activation kind) {
  if (output.dims() != grad_out.dims()) throw ShapeError("activation_backward extent mismatch");
  Tensor<T> dx(output.dims());
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = grad_out[i] * activate_derivative(output[i], kind);
  return dx;
}

}  // namespace accdet
