// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cstring>
#include <string>

#include "accdet/core/tensor.hpp"

namespace accdet {

enum class Padding { valid, same };

// (temporal, height, width) triple used for kernel extents, strides, windows.
struct Extent3 {
  std::size_t t = 1, h = 1, w = 1;
  friend bool operator==(const Extent3&, const Extent3&) = default;
};

struct AxisGeometry {
  std::size_t in = 0, kernel = 0, stride = 1, out = 0, pad_before = 0;
};

// Output extent and leading pad along one axis. "same" pads with zeros
// symmetrically, putting the odd element on the trailing side.
inline AxisGeometry axis_geometry(std::size_t in, std::size_t kernel, std::size_t stride,
                                  Padding padding) {
  if (stride == 0) throw ShapeError("stride must be >= 1");
  if (kernel == 0) throw ShapeError("kernel extent must be >= 1");
  AxisGeometry g{in, kernel, stride, 0, 0};
  if (padding == Padding::valid) {
    if (kernel > in) {
      throw ShapeError("valid padding yields empty output (kernel " + std::to_string(kernel) +
                       " > input " + std::to_string(in) + ")");
    }
    g.out = (in - kernel) / stride + 1;
  } else {
    g.out = (in + stride - 1) / stride;
    const std::size_t needed = (g.out - 1) * stride + kernel;
    g.pad_before = needed > in ? (needed - in) / 2 : 0;
  }
  return g;
}

struct Conv3dGeometry {
  AxisGeometry t, h, w;
  std::size_t channels = 0, filters = 0;

  std::size_t positions() const { return t.out * h.out * w.out; }
  std::size_t patch() const { return t.kernel * h.kernel * w.kernel * channels; }
  Shape output_dims() const { return {t.out, h.out, w.out, filters}; }
};

inline Conv3dGeometry conv3d_geometry(const Shape& input, const Shape& kernel, Extent3 stride,
                                      Padding padding) {
  if (input.size() != 4) throw ShapeError("conv3d input must be T x H x W x C, got " + shape_string(input));
  if (kernel.size() != 5) throw ShapeError("conv3d kernel must be Kt x Kh x Kw x C x F, got " + shape_string(kernel));
  if (input[3] != kernel[3]) {
    throw ShapeError("conv channel mismatch: input " + std::to_string(input[3]) + ", kernel " +
                     std::to_string(kernel[3]));
  }
  Conv3dGeometry g;
  g.t = axis_geometry(input[0], kernel[0], stride.t, padding);
  g.h = axis_geometry(input[1], kernel[1], stride.h, padding);
  g.w = axis_geometry(input[2], kernel[2], stride.w, padding);
  g.channels = input[3];
  g.filters = kernel[4];
  return g;
}

namespace detail {

template <class T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline std::size_t im2col_chunk_rows(const Conv3dGeometry& g) {
  constexpr std::size_t kBudget = std::size_t{1} << 21;
  return std::clamp<std::size_t>(kBudget / g.patch(), 1, g.positions());
}

// Fills rows [first, first+rows) of the patch matrix, one output position per row.
template <class T>
void im2col(const T* x, const Conv3dGeometry& g, std::size_t first, std::size_t rows, T* cols) {
  const std::size_t C = g.channels, W = g.w.in, H = g.h.in;
  const std::size_t span = g.w.kernel * C, patch = g.patch();
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t p = first + r;
    const std::size_t ow = p % g.w.out, oh = (p / g.w.out) % g.h.out, ot = p / (g.w.out * g.h.out);
    T* row = cols + r * patch;
    const long w0 = static_cast<long>(ow * g.w.stride) - static_cast<long>(g.w.pad_before);
    const long lo = std::max<long>(0, -w0);
    const long hi = std::min<long>(static_cast<long>(g.w.kernel), static_cast<long>(W) - w0);
    for (std::size_t kt = 0; kt < g.t.kernel; ++kt) {
      const long ti = static_cast<long>(ot * g.t.stride + kt) - static_cast<long>(g.t.pad_before);
      for (std::size_t kh = 0; kh < g.h.kernel; ++kh, row += span) {
        const long hi_ = static_cast<long>(oh * g.h.stride + kh) - static_cast<long>(g.h.pad_before);
        if (ti < 0 || ti >= static_cast<long>(g.t.in) || hi_ < 0 || hi_ >= static_cast<long>(H) || hi <= lo) {
          std::fill_n(row, span, T{0});
          continue;
        }
        const T* src = x + ((static_cast<std::size_t>(ti) * H + static_cast<std::size_t>(hi_)) * W) * C;
        if (lo > 0) std::fill_n(row, static_cast<std::size_t>(lo) * C, T{0});
        std::memcpy(row + lo * C, src + (w0 + lo) * static_cast<long>(C),
                    static_cast<std::size_t>(hi - lo) * C * sizeof(T));
        if (hi < static_cast<long>(g.w.kernel)) {
          std::fill_n(row + hi * C, (g.w.kernel - static_cast<std::size_t>(hi)) * C, T{0});
        }
      }
    }
  }
}

// Scatter-adds patch-matrix rows back onto the input gradient.
template <class T>
void col2im_add(const T* cols, const Conv3dGeometry& g, std::size_t first, std::size_t rows, T* dx) {
  const std::size_t C = g.channels, W = g.w.in, H = g.h.in;
  const std::size_t span = g.w.kernel * C, patch = g.patch();
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t p = first + r;
    const std::size_t ow = p % g.w.out, oh = (p / g.w.out) % g.h.out, ot = p / (g.w.out * g.h.out);
    const T* row = cols + r * patch;
    const long w0 = static_cast<long>(ow * g.w.stride) - static_cast<long>(g.w.pad_before);
    const long lo = std::max<long>(0, -w0);
    const long hi = std::min<long>(static_cast<long>(g.w.kernel), static_cast<long>(W) - w0);
    for (std::size_t kt = 0; kt < g.t.kernel; ++kt) {
      const long ti = static_cast<long>(ot * g.t.stride + kt) - static_cast<long>(g.t.pad_before);
      for (std::size_t kh = 0; kh < g.h.kernel; ++kh, row += span) {
        const long hi_ = static_cast<long>(oh * g.h.stride + kh) - static_cast<long>(g.h.pad_before);
        if (ti < 0 || ti >= static_cast<long>(g.t.in) || hi_ < 0 || hi_ >= static_cast<long>(H) || hi <= lo) {
          continue;
        }
        T* dst = dx + ((static_cast<std::size_t>(ti) * H + static_cast<std::size_t>(hi_)) * W) * C +
                 (w0 + lo) * static_cast<long>(C);
        const T* src = row + lo * C;
        const std::size_t n = static_cast<std::size_t>(hi - lo) * C;
        for (std::size_t i = 0; i < n; ++i) dst[i] += src[i];
      }
    }
  }
}

}  // namespace detail

// 3-D convolution (cross-correlation) without bias.
// input T x H x W x C, kernel Kt x Kh x Kw x C x F -> T' x H' x W' x F.
template <class T>
Tensor<T> conv3d(const Tensor<T>& input, const Tensor<T>& kernel, Extent3 stride, Padding padding) {
  const auto g = conv3d_geometry(input.dims(), kernel.dims(), stride, padding);
  Tensor<T> out(g.output_dims());
  const std::size_t K = g.patch(), F = g.filters, chunk = detail::im2col_chunk_rows(g);
  std::vector<T> cols(chunk * K);
  Eigen::Map<const detail::RowMatrix<T>> w(kernel.data(), K, F);
  for (std::size_t first = 0; first < g.positions(); first += chunk) {
    const std::size_t rows = std::min(chunk, g.positions() - first);
    detail::im2col(input.data(), g, first, rows, cols.data());
    Eigen::Map<const detail::RowMatrix<T>> a(cols.data(), rows, K);
    Eigen::Map<detail::RowMatrix<T>> y(out.data() + first * F, rows, F);
    y.noalias() = a * w;
  }
  return out;
}

// Backward of conv3d. Accumulates dL/dkernel into `kernel_grad` when non-null
// and returns dL/dinput when `need_input_grad` (otherwise an empty tensor).
template <class T>
Tensor<T> conv3d_backward(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& grad_out,
                          Extent3 stride, Padding padding, Tensor<T>* kernel_grad,
                          bool need_input_grad) {
  const auto g = conv3d_geometry(input.dims(), kernel.dims(), stride, padding);
  if (grad_out.dims() != g.output_dims()) throw ShapeError("conv3d_backward: gradient extent mismatch");
  if (kernel_grad && kernel_grad->dims() != kernel.dims()) {
    throw ShapeError("conv3d_backward: kernel grad extent mismatch");
  }
  Tensor<T> dx;
  if (need_input_grad) dx = Tensor<T>(input.dims());
  if (!kernel_grad && !need_input_grad) return dx;
  const std::size_t K = g.patch(), F = g.filters, chunk = detail::im2col_chunk_rows(g);
  std::vector<T> cols(chunk * K);
  Eigen::Map<const detail::RowMatrix<T>> w(kernel.data(), K, F);
  for (std::size_t first = 0; first < g.positions(); first += chunk) {
    const std::size_t rows = std::min(chunk, g.positions() - first);
    Eigen::Map<const detail::RowMatrix<T>> dy(grad_out.data() + first * F, rows, F);
    if (kernel_grad) {
      detail::im2col(input.data(), g, first, rows, cols.data());
      Eigen::Map<const detail::RowMatrix<T>> a(cols.data(), rows, K);
      Eigen::Map<detail::RowMatrix<T>> dw(kernel_grad->data(), K, F);
      dw.noalias() += a.transpose() * dy;
    }
    if (need_input_grad) {
      Eigen::Map<detail::RowMatrix<T>> dcols(cols.data(), rows, K);
      dcols.noalias() = dy * w.transpose();
      detail::col2im_add(cols.data(), g, first, rows, dx.data());
    }
  }
  return dx;
}

template <class T>
Tensor<T> conv3d(const Tensor<T>& input, const Parameter<T>& kernel, Extent3 stride, Padding padding) {
  return conv3d(input, kernel.value, stride, padding);
}

template <class T>
Tensor<T> conv3d_backward(const Tensor<T>& input, Parameter<T>& kernel, const Tensor<T>& grad_out,
                          Extent3 stride, Padding padding, bool need_input_grad = true) {
  return conv3d_backward(input, kernel.value, grad_out, stride, padding,
                         kernel.trainable ? &kernel.grad : nullptr, need_input_grad);
}

// 2-D convolution: input H x W x C, kernel Kh x Kw x C x F -> H' x W' x F.
template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernel, std::size_t stride, Padding padding) {
  if (input.rank() != 3) throw ShapeError("conv2d input must be H x W x C, got " + shape_string(input.dims()));
  if (kernel.rank() != 4) throw ShapeError("conv2d kernel must be Kh x Kw x C x F, got " + shape_string(kernel.dims()));
  auto x = input.reshaped({1, input.dim(0), input.dim(1), input.dim(2)});
  auto k = kernel.reshaped({1, kernel.dim(0), kernel.dim(1), kernel.dim(2), kernel.dim(3)});
  auto y = conv3d(x, k, Extent3{1, stride, stride}, padding);
  return std::move(y).reshaped({y.dim(1), y.dim(2), y.dim(3)});
}

template <class T>
Tensor<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& grad_out,
                          std::size_t stride, Padding padding, Tensor<T>* kernel_grad,
                          bool need_input_grad) {
  if (input.rank() != 3 || kernel.rank() != 4 || grad_out.rank() != 3) {
    throw ShapeError("conv2d_backward rank mismatch");
  }
  auto x = input.reshaped({1, input.dim(0), input.dim(1), input.dim(2)});
  auto k = kernel.reshaped({1, kernel.dim(0), kernel.dim(1), kernel.dim(2), kernel.dim(3)});
  auto dy = grad_out.reshaped({1, grad_out.dim(0), grad_out.dim(1), grad_out.dim(2)});
  Tensor<T> dk;
  if (kernel_grad) dk = Tensor<T>(k.dims());
  auto dx = conv3d_backward(x, k, dy, Extent3{1, stride, stride}, padding,
                            kernel_grad ? &dk : nullptr, need_input_grad);
  if (kernel_grad) {
    for (std::size_t i = 0; i < dk.size(); ++i) (*kernel_grad)[i] += dk[i];
  }
  if (need_input_grad) return std::move(dx).reshaped(input.dims());
  return dx;
}

template <class T>
Tensor<T> conv2d(const Tensor<T>& input, const Parameter<T>& kernel, std::size_t stride, Padding padding) {
  return conv2d(input, kernel.value, stride, padding);
}

template <class T>
Tensor<T> conv2d_backward(const Tensor<T>& input, Parameter<T>& kernel, const Tensor<T>& grad_out,
                          std::size_t stride, Padding padding, bool need_input_grad = true) {
  return conv2d_backward(input, kernel.value, grad_out, stride, padding,
                         kernel.trainable ? &kernel.grad : nullptr, need_input_grad);
}

// Adds a per-channel bias along the last axis, in place.
template <class T>
void add_channel_bias(Tensor<T>& x, const Tensor<T>& bias) {
  const std::size_t c = x.dims().back();
  if (bias.size() != c) throw ShapeError("bias length does not match channel count");
  for (std::size_t i = 0; i < x.size(); i += c) {
    for (std::size_t j = 0; j < c; ++j) x[i + j] += bias[j];
  }
}

template <class T>
void accumulate_channel_bias_grad(const Tensor<T>& grad_out, Tensor<T>& bias_grad) {
  const std::size_t c = grad_out.dims().back();
  if (bias_grad.size() != c) throw ShapeError("bias length does not match channel count");
  for (std::size_t i = 0; i < grad_out.size(); i += c) {
    for (std::size_t j = 0; j < c; ++j) bias_grad[j] += grad_out[i + j];
  }
}

}  // namespace accdet
