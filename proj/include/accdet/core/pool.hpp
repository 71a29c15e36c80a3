// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <limits>
#include <vector>

#include "accdet/core/conv.hpp"

namespace accdet {

template <class T>
struct PoolResult {
  Tensor<T> output;
  // Flat input offset of the winning element for every output cell.
  std::vector<std::size_t> argmax;
};

// Max pooling over (t, h, w) windows of a T x H x W x C tensor. Padded cells
// never win. Ties go to the first element in (t, h, w) scan order.
template <class T>
PoolResult<T> maxpool3d_with_indices(const Tensor<T>& input, Extent3 window, Extent3 stride,
                                     Padding padding = Padding::valid) {
  if (input.rank() != 4) throw ShapeError("maxpool3d input must be T x H x W x C");
  if (window.t > input.dim(0) || window.h > input.dim(1) || window.w > input.dim(2)) {
    throw ShapeError("pool window larger than input " + shape_string(input.dims()));
  }
  const auto gt = axis_geometry(input.dim(0), window.t, stride.t, padding);
  const auto gh = axis_geometry(input.dim(1), window.h, stride.h, padding);
  const auto gw = axis_geometry(input.dim(2), window.w, stride.w, padding);
  const std::size_t H = input.dim(1), W = input.dim(2), C = input.dim(3);
  PoolResult<T> r{Tensor<T>({gt.out, gh.out, gw.out, C}), {}};
  r.argmax.resize(r.output.size());
  std::size_t o = 0;
  for (std::size_t ot = 0; ot < gt.out; ++ot) {
    for (std::size_t oh = 0; oh < gh.out; ++oh) {
      for (std::size_t ow = 0; ow < gw.out; ++ow) {
        for (std::size_t c = 0; c < C; ++c, ++o) {
          T best = -std::numeric_limits<T>::infinity();
          std::size_t arg = std::numeric_limits<std::size_t>::max();
          for (std::size_t kt = 0; kt < window.t; ++kt) {
            const long ti = static_cast<long>(ot * stride.t + kt) - static_cast<long>(gt.pad_before);
            if (ti < 0 || ti >= static_cast<long>(gt.in)) continue;
            for (std::size_t kh = 0; kh < window.h; ++kh) {
              const long hi = static_cast<long>(oh * stride.h + kh) - static_cast<long>(gh.pad_before);
              if (hi < 0 || hi >= static_cast<long>(H)) continue;
              for (std::size_t kw = 0; kw < window.w; ++kw) {
                const long wi = static_cast<long>(ow * stride.w + kw) - static_cast<long>(gw.pad_before);
                if (wi < 0 || wi >= static_cast<long>(W)) continue;
                const std::size_t idx =
                    ((static_cast<std::size_t>(ti) * H + static_cast<std::size_t>(hi)) * W +
                     static_cast<std::size_t>(wi)) * C + c;
                if (arg == std::numeric_limits<std::size_t>::max() || input[idx] > best) {
                  best = input[idx];
                  arg = idx;
                }
              }
            }
          }
          r.output[o] = best;
          r.argmax[o] = arg;
        }
      }
    }
  }
  return r;
}

template <class T>
Tensor<T> maxpool3d(const Tensor<T>& input, Extent3 window, Extent3 stride,
                    Padding padding = Padding::valid) {
  return maxpool3d_with_indices(input, window, stride, padding).output;
}

template <class T>
Tensor<T> maxpool3d_backward(const Shape& input_dims, const std::vector<std::size_t>& argmax,
                             const Tensor<T>& grad_out) {
  if (argmax.size() != grad_out.size()) throw ShapeError("maxpool3d_backward: index count mismatch");
  Tensor<T> dx(input_dims);
  for (std::size_t i = 0; i < argmax.size(); ++i) dx[argmax[i]] += grad_out[i];
  return dx;
}

}  // namespace accdet
