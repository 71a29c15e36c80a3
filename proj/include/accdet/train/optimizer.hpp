// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "accdet/core/tensor.hpp"
#include "accdet/model/config.hpp"

namespace accdet {

// Updates every trainable parameter from its accumulated gradient. Frozen
// parameters are never touched.
template <class T>
class Optimizer {
 public:
  virtual ~Optimizer() = default;
  virtual void step(std::span<const NamedParameter<T>> params) = 0;
  virtual std::size_t steps() const = 0;
};

template <class T>
class Sgd final : public Optimizer<T> {
 public:
  explicit Sgd(double learning_rate) : lr_(learning_rate) {}

  void step(std::span<const NamedParameter<T>> params) override {
    ++steps_;
    for (const auto& p : params) {
      if (!p.param->trainable) continue;
      auto& v = p.param->value;
      const auto& g = p.param->grad;
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<T>(v[i] - lr_ * g[i]);
    }
  }
  std::size_t steps() const override { return steps_; }

 private:
  double lr_;
  std::size_t steps_ = 0;
};

// Adam with bias correction. Moments are kept in double and indexed by the
// position of each parameter in the list passed to step().
template <class T>
class Adam final : public Optimizer<T> {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

  void step(std::span<const NamedParameter<T>> params) override {
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.emplace_back(p.param->value.size(), 0.0);
        v_.emplace_back(p.param->value.size(), 0.0);
      }
    }
    if (m_.size() != params.size()) throw ShapeError("Adam: parameter list changed between steps");
    ++steps_;
    const double t = static_cast<double>(steps_);
    const double c1 = 1.0 - std::pow(beta1_, t), c2 = 1.0 - std::pow(beta2_, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto& prm = *params[k].param;
      if (!prm.trainable) continue;
      if (m_[k].size() != prm.value.size()) throw ShapeError("Adam: parameter size changed between steps");
      for (std::size_t i = 0; i < prm.value.size(); ++i) {
        const double g = static_cast<double>(prm.grad[i]);
        m_[k][i] = beta1_ * m_[k][i] + (1.0 - beta1_) * g;
        v_[k][i] = beta2_ * v_[k][i] + (1.0 - beta2_) * g * g;
        const double mhat = m_[k][i] / c1, vhat = v_[k][i] / c2;
        prm.value[i] = static_cast<T>(prm.value[i] - lr_ * mhat / (std::sqrt(vhat) + eps_));
      }
    }
  }
  std::size_t steps() const override { return steps_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::size_t steps_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

template <class T>
std::unique_ptr<Optimizer<T>> make_optimizer(OptimizerKind kind, double learning_rate) {
  if (kind == OptimizerKind::sgd) return std::make_unique<Sgd<T>>(learning_rate);
  return std::make_unique<Adam<T>>(learning_rate);
}

}  // namespace accdet
