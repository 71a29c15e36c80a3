// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>

#include "accdet/core/tensor.hpp"

namespace accdet {

enum class Mode { train, infer };

// Per-channel batch normalization over every axis except the last. Running
// statistics start at mean 0 / variance 1 and follow an exponential moving
// average of the biased batch statistics in train mode.
template <class T>
struct BatchNorm {
  Parameter<T> scale;
  Parameter<T> shift;
  Tensor<T> running_mean;
  Tensor<T> running_var;
  double momentum = 0.1;
  double epsilon = 1e-3;

  BatchNorm() = default;
  explicit BatchNorm(std::size_t channels)
      : scale(Tensor<T>({channels}, T{1})),
        shift(Tensor<T>({channels}, T{0})),
        running_mean({channels}, T{0}),
        running_var({channels}, T{1}) {}

  std::size_t channels() const { return running_mean.size(); }

  struct Cache {
    Tensor<T> normalized;
    std::vector<double> inv_std;
    Mode mode = Mode::infer;
  };

  Tensor<T> forward(const Tensor<T>& x, Mode mode, Cache* cache = nullptr) {
    const std::size_t c = channels();
    if (x.rank() == 0 || x.dims().back() != c) throw ShapeError("batchnorm channel mismatch");
    const std::size_t m = x.size() / c;
    if (mode == Mode::train && m == 0) throw ShapeError("batchnorm: empty batch in train mode");
    std::vector<double> mean(c, 0.0), var(c, 0.0);
    if (mode == Mode::train) {
      for (std::size_t i = 0; i < x.size(); i += c) {
        for (std::size_t j = 0; j < c; ++j) mean[j] += x[i + j];
      }
      for (auto& v : mean) v /= static_cast<double>(m);
      for (std::size_t i = 0; i < x.size(); i += c) {
        for (std::size_t j = 0; j < c; ++j) {
          const double d = x[i + j] - mean[j];
          var[j] += d * d;
        }
      }
      for (std::size_t j = 0; j < c; ++j) {
        var[j] /= static_cast<double>(m);
        running_mean[j] = static_cast<T>((1.0 - momentum) * running_mean[j] + momentum * mean[j]);
        running_var[j] = static_cast<T>((1.0 - momentum) * running_var[j] + momentum * var[j]);
      }
    } else {
      for (std::size_t j = 0; j < c; ++j) {
        mean[j] = running_mean[j];
        var[j] = running_var[j];
      }
    }
    std::vector<double> inv_std(c);
    for (std::size_t j = 0; j < c; ++j) inv_std[j] = 1.0 / std::sqrt(var[j] + epsilon);
    Tensor<T> y(x.dims());
    Tensor<T> normalized(x.dims());
    for (std::size_t i = 0; i < x.size(); i += c) {
      for (std::size_t j = 0; j < c; ++j) {
        const double xh = (x[i + j] - mean[j]) * inv_std[j];
        normalized[i + j] = static_cast<T>(xh);
        y[i + j] = static_cast<T>(xh * scale.value[j] + shift.value[j]);
      }
    }
    if (cache) *cache = Cache{std::move(normalized), std::move(inv_std), mode};
    return y;
  }

  Tensor<T> backward(const Cache& cache, const Tensor<T>& grad_out) {
    const std::size_t c = channels();
    const auto& xh = cache.normalized;
    if (grad_out.dims() != xh.dims()) throw ShapeError("batchnorm_backward extent mismatch");
    const std::size_t m = grad_out.size() / c;
    std::vector<double> sum_dy(c, 0.0), sum_dy_xh(c, 0.0);
    for (std::size_t i = 0; i < grad_out.size(); i += c) {
      for (std::size_t j = 0; j < c; ++j) {
        sum_dy[j] += grad_out[i + j];
        sum_dy_xh[j] += static_cast<double>(grad_out[i + j]) * xh[i + j];
      }
    }
    if (scale.trainable) {
      for (std::size_t j = 0; j < c; ++j) scale.grad[j] += static_cast<T>(sum_dy_xh[j]);
    }
    if (shift.trainable) {
      for (std::size_t j = 0; j < c; ++j) shift.grad[j] += static_cast<T>(sum_dy[j]);
    }
    Tensor<T> dx(grad_out.dims());
    for (std::size_t i = 0; i < grad_out.size(); i += c) {
      for (std::size_t j = 0; j < c; ++j) {
        const double g = scale.value[j] * cache.inv_std[j];
        if (cache.mode == Mode::train) {
          const double md = static_cast<double>(m);
          dx[i + j] = static_cast<T>(g * (grad_out[i + j] - sum_dy[j] / md -
                                          xh[i + j] * sum_dy_xh[j] / md));
        } else {
          dx[i + j] = static_cast<T>(g * grad_out[i + j]);
        }
      }
    }
    return dx;
  }
};

}  // namespace accdet
