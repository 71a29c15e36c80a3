// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "accdet/core/error.hpp"

namespace accdet {

// Class 0 owns logit z1 (accident), class 1 owns z2 (no accident).
enum class Label { accident = 0, normal = 1 };

inline std::string_view to_string(Label l) { return l == Label::accident ? "accident" : "normal"; }

inline Label parse_label(std::string_view s) {
  if (s == "accident") return Label::accident;
  if (s == "normal") return Label::normal;
  throw DataError("unknown label '" + std::string(s) + "' (expected accident|normal)");
}

struct Probabilities {
  double accident = 0.5;
  double normal = 0.5;
  double of(Label l) const { return l == Label::accident ? accident : normal; }
};

// Two-class softmax evaluated in double with max-subtraction.
inline Probabilities softmax2(double z_accident, double z_normal) {
  if (!std::isfinite(z_accident) || !std::isfinite(z_normal)) {
    throw NumericError("softmax2: non-finite logits");
  }
  const double m = std::max(z_accident, z_normal);
  const double ea = std::exp(z_accident - m), en = std::exp(z_normal - m);
  const double s = ea + en;
  return {ea / s, en / s};
}

constexpr double kProbabilityFloor = 1e-12;

inline double cross_entropy(const Probabilities& p, Label label) {
  const int k = static_cast<int>(label);
  if (k != 0 && k != 1) throw ShapeError("cross_entropy: invalid label");
  return -std::log(std::max(p.of(label), kProbabilityFloor));
}

// Gradient of weight * cross_entropy(softmax2(z), label) w.r.t. (z1, z2).
inline std::array<double, 2> cross_entropy_logit_grad(const Probabilities& p, Label label,
                                                      double weight = 1.0) {
  const double ya = label == Label::accident ? 1.0 : 0.0;
  return {weight * (p.accident - ya), weight * (p.normal - (1.0 - ya))};
}

}  // namespace accdet
