// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "accdet/core/tensor.hpp"

namespace accdet {

// Global average pooling: H x W x C -> C, one spatial mean per channel.
template <class T>
Tensor<T> gap2d(const Tensor<T>& x) {
  if (x.rank() != 3) throw ShapeError("gap2d expects H x W x C, got " + shape_string(x.dims()));
  const std::size_t hw = x.dim(0) * x.dim(1), c = x.dim(2);
  std::vector<double> acc(c, 0.0);
  for (std::size_t p = 0; p < hw; ++p) {
    for (std::size_t j = 0; j < c; ++j) acc[j] += static_cast<double>(x[p * c + j]);
  }
  Tensor<T> y({c});
  for (std::size_t j = 0; j < c; ++j) y[j] = static_cast<T>(acc[j] / static_cast<double>(hw));
  return y;
}

template <class T>
Tensor<T> gap2d_backward(const Shape& input_dims, const Tensor<T>& grad_out) {
  if (input_dims.size() != 3 || grad_out.size() != input_dims[2]) {
    throw ShapeError("gap2d_backward extent mismatch");
  }
  Tensor<T> dx(input_dims);
  const std::size_t hw = input_dims[0] * input_dims[1], c = input_dims[2];
  const T scale = T{1} / static_cast<T>(hw);
  for (std::size_t p = 0; p < hw; ++p) {
    for (std::size_t j = 0; j < c; ++j) dx[p * c + j] = grad_out[j] * scale;
  }
  return dx;
}

}  // namespace accdet
