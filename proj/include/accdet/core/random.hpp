// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "accdet/core/tensor.hpp"

namespace accdet {

using Rng = std::mt19937_64;

// Derives an independent stream from a base seed and a label, so that adding a
// layer does not shift the draws of every layer after it.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

template <class T>
void fill_uniform(Tensor<T>& t, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (auto& v : t.values()) v = static_cast<T>(dist(rng));
}

// He-style uniform: U(-sqrt(6/fan_in), +sqrt(6/fan_in)).
template <class T>
Tensor<T> he_uniform(Shape dims, std::size_t fan_in, Rng& rng) {
  Tensor<T> t(std::move(dims));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  fill_uniform(t, rng, -limit, limit);
  return t;
}

// Fan-in scaled uniform for saturating (sigmoid/tanh) consumers.
template <class T>
Tensor<T> lecun_uniform(Shape dims, std::size_t fan_in, Rng& rng) {
  Tensor<T> t(std::move(dims));
  const double limit = std::sqrt(3.0 / static_cast<double>(fan_in));
  fill_uniform(t, rng, -limit, limit);
  return t;
}

}  // namespace accdet
