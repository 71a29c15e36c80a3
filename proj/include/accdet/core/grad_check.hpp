// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <string>

#include "accdet/core/random.hpp"
#include "accdet/core/tensor.hpp"

namespace accdet {

struct GradCheckOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  // Parameters with more elements than this are checked on a random subsample.
  std::size_t max_elements = 10000;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  bool passed = true;
  std::string worst;  // "<param>[<index>]" of the largest error
};

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

// Compares analytic gradients against central finite differences.
//   loss():     forward pass returning a scalar; must not touch gradients.
//   backward(): accumulates dloss/dparam into every trainable param's grad.
// Gradients are zeroed before backward runs. Frozen parameters are skipped.
inline GradCheckReport grad_check(std::span<const NamedParameter<double>> params,
                                  const std::function<double()>& loss,
                                  const std::function<void()>& backward,
                                  const GradCheckOptions& options = {}) {
  for (const auto& np : params) np.param->zero_grad();
  backward();
  GradCheckReport report;
  Rng rng(options.seed);
  for (const auto& np : params) {
    auto& p = *np.param;
    if (!p.trainable) continue;
    std::vector<std::size_t> indices(p.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    if (indices.size() > options.max_elements) {
      std::shuffle(indices.begin(), indices.end(), rng);
      indices.resize(options.max_elements);
      std::sort(indices.begin(), indices.end());
    }
    for (auto i : indices) {
      const double saved = p.value[i];
      p.value[i] = saved + options.epsilon;
      const double up = loss();
      p.value[i] = saved - options.epsilon;
      const double down = loss();
      p.value[i] = saved;
      const double numeric = (up - down) / (2.0 * options.epsilon);
      const double err = relative_error(p.grad[i], numeric);
      ++report.checked;
      if (err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst = np.name + "[" + std::to_string(i) + "]";
      }
    }
  }
  report.passed = report.max_relative_error < options.tolerance;
  return report;
}

}  // namespace accdet
