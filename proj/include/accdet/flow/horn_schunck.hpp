// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <functional>
#include <string>

#include "accdet/core/tensor.hpp"
#include "accdet/video/frame_sequence.hpp"

namespace accdet {

// Dense motion field in pixels/frame; u is horizontal, v vertical.
template <class T = float>
struct FlowField {
  Tensor<T> u;
  Tensor<T> v;
};

struct HornSchunckOptions {
  double alpha = 15.0;
  std::size_t iterations = 100;
};

// Frames arrive in [0, 1]; derivatives are taken on 8-bit intensity units so
// that alpha keeps its conventional scale.
inline constexpr double kFlowIntensityScale = 255.0;

namespace detail {

template <class T>
struct FlowDerivatives {
  std::size_t h = 0, w = 0;
  std::vector<T> ix, iy, it;
};

// Central differences averaged over both frames, edge replication at borders,
// temporal derivative by frame difference.
template <class T>
FlowDerivatives<T> flow_derivatives(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2) throw ShapeError("horn_schunck expects H x W grayscale frames");
  if (a.dims() != b.dims()) {
    throw ShapeError("horn_schunck extent mismatch: " + shape_string(a.dims()) + " vs " + shape_string(b.dims()));
  }
  FlowDerivatives<T> d{a.dim(0), a.dim(1), {}, {}, {}};
  const std::size_t H = d.h, W = d.w;
  d.ix.resize(H * W);
  d.iy.resize(H * W);
  d.it.resize(H * W);
  const T s = static_cast<T>(kFlowIntensityScale);
  for (std::size_t y = 0; y < H; ++y) {
    const std::size_t ym = y ? y - 1 : 0, yp = std::min(y + 1, H - 1);
    for (std::size_t x = 0; x < W; ++x) {
      const std::size_t xm = x ? x - 1 : 0, xp = std::min(x + 1, W - 1);
      const std::size_t i = y * W + x;
      const T gxa = (a[y * W + xp] - a[y * W + xm]) * T(0.5);
      const T gxb = (b[y * W + xp] - b[y * W + xm]) * T(0.5);
      const T gya = (a[yp * W + x] - a[ym * W + x]) * T(0.5);
      const T gyb = (b[yp * W + x] - b[ym * W + x]) * T(0.5);
      d.ix[i] = s * (gxa + gxb) * T(0.5);
      d.iy[i] = s * (gya + gyb) * T(0.5);
      d.it[i] = s * (b[i] - a[i]);
    }
  }
  return d;
}

template <class T>
double flow_energy(const FlowDerivatives<T>& d, const FlowField<T>& f, double alpha) {
  const std::size_t H = d.h, W = d.w;
  double data = 0.0, smooth = 0.0;
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      const std::size_t i = y * W + x;
      const double r = static_cast<double>(d.ix[i]) * f.u[i] + static_cast<double>(d.iy[i]) * f.v[i] + d.it[i];
      data += r * r;
      if (x + 1 < W) {
        const double du = f.u[i + 1] - static_cast<double>(f.u[i]);
        const double dv = f.v[i + 1] - static_cast<double>(f.v[i]);
        smooth += du * du + dv * dv;
      }
      if (y + 1 < H) {
        const double du = f.u[i + W] - static_cast<double>(f.u[i]);
        const double dv = f.v[i + W] - static_cast<double>(f.v[i]);
        smooth += du * du + dv * dv;
      }
    }
  }
  return data + 0.25 * alpha * alpha * smooth;
}

}  // namespace detail

// Objective minimized by the Jacobi sweep below:
//   sum_p (Ix u + Iy v + It)^2 + (alpha^2 / 4) * sum_{4-neighbour edges} (|du|^2 + |dv|^2)
// Each sweep is the exact per-pixel minimizer given the neighbour averages,
// which makes the objective non-increasing from one sweep to the next.
template <class T>
double horn_schunck_energy(const Tensor<T>& a, const Tensor<T>& b, const FlowField<T>& flow, double alpha) {
  const auto d = detail::flow_derivatives(a, b);
  if (flow.u.dims() != a.dims() || flow.v.dims() != a.dims()) throw ShapeError("flow extent mismatch");
  return detail::flow_energy(d, flow, alpha);
}

// Called after every sweep with (sweep index starting at 1, current field).
template <class T>
using SweepObserver = std::function<void(std::size_t, const FlowField<T>&)>;

template <class T>
FlowField<T> horn_schunck(const Tensor<T>& frame_a, const Tensor<T>& frame_b, double alpha,
                          std::size_t iterations, const SweepObserver<T>& observer = {}) {
  if (!(alpha > 0.0)) throw ShapeError("horn_schunck: alpha must be > 0");
  if (iterations == 0) throw ShapeError("horn_schunck: iterations must be >= 1");
  const auto d = detail::flow_derivatives(frame_a, frame_b);
  const std::size_t H = d.h, W = d.w, n = H * W;
  const T a2 = static_cast<T>(alpha * alpha);
  // Per-pixel update coefficients: u = ubar - ix * (ix*ubar + iy*vbar + it) / den.
  std::vector<T> inv_den(n);
  for (std::size_t i = 0; i < n; ++i) inv_den[i] = T{1} / (a2 + d.ix[i] * d.ix[i] + d.iy[i] * d.iy[i]);

  FlowField<T> cur{Tensor<T>(frame_a.dims()), Tensor<T>(frame_a.dims())};
  FlowField<T> next{Tensor<T>(frame_a.dims()), Tensor<T>(frame_a.dims())};
  const T quarter = T(0.25);
  const T* __restrict ix = d.ix.data();
  const T* __restrict iy = d.iy.data();
  const T* __restrict it = d.it.data();
  const T* __restrict id = inv_den.data();
  for (std::size_t sweep = 1; sweep <= iterations; ++sweep) {
    const T* __restrict u = cur.u.data();
    const T* __restrict v = cur.v.data();
    T* __restrict nu = next.u.data();
    T* __restrict nv = next.v.data();
    for (std::size_t y = 0; y < H; ++y) {
      const std::size_t ym = (y ? y - 1 : 0) * W, yp = std::min(y + 1, H - 1) * W, row = y * W;
      auto pixel = [&](std::size_t x, std::size_t xm, std::size_t xp) {
        const std::size_t i = row + x;
        const T ub = (u[row + xm] + u[row + xp] + u[ym + x] + u[yp + x]) * quarter;
        const T vb = (v[row + xm] + v[row + xp] + v[ym + x] + v[yp + x]) * quarter;
        const T t = (ix[i] * ub + iy[i] * vb + it[i]) * id[i];
        nu[i] = ub - ix[i] * t;
        nv[i] = vb - iy[i] * t;
      };
      pixel(0, 0, std::min<std::size_t>(1, W - 1));
#pragma GCC ivdep
      for (std::size_t x = 1; x + 1 < W; ++x) {
        const std::size_t i = row + x;
        const T ub = (u[i - 1] + u[i + 1] + u[ym + x] + u[yp + x]) * quarter;
        const T vb = (v[i - 1] + v[i + 1] + v[ym + x] + v[yp + x]) * quarter;
        const T t = (ix[i] * ub + iy[i] * vb + it[i]) * id[i];
        nu[i] = ub - ix[i] * t;
        nv[i] = vb - iy[i] * t;
      }
      if (W > 1) pixel(W - 1, W - 2, W - 1);
    }
    std::swap(cur, next);
    if (observer) observer(sweep, cur);
  }
  return cur;
}

template <class T>
Tensor<T> luminance(const Tensor<T>& rgb) {
  if (rgb.rank() != 3 || rgb.dim(2) != 3) throw ShapeError("luminance expects H x W x 3");
  Tensor<T> g({rgb.dim(0), rgb.dim(1)});
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = T(0.299) * rgb[3 * i] + T(0.587) * rgb[3 * i + 1] + T(0.114) * rgb[3 * i + 2];
  }
  return g;
}

// H x W x 2 field of (u, v) between two RGB frames.
inline Tensor<float> flow_pair(const Tensor<float>& a, const Tensor<float>& b, const HornSchunckOptions& options = {}) {
  const auto f = horn_schunck(luminance(a), luminance(b), options.alpha, options.iterations);
  Tensor<float> out({f.u.dim(0), f.u.dim(1), 2});
  for (std::size_t i = 0; i < f.u.size(); ++i) {
    out[2 * i] = f.u[i];
    out[2 * i + 1] = f.v[i];
  }
  return out;
}

// N RGB frames -> N x H x W x 2 stack of (u, v). Fields are computed for the
// N-1 consecutive pairs and the last field is repeated once so both branches
// share temporal length.
inline Tensor<float> flow_sequence(std::span<const Tensor<float>> frames,
                                   const HornSchunckOptions& options = {}) {
  if (frames.size() < 2) throw ShapeError("flow_sequence needs at least 2 frames");
  std::vector<Tensor<float>> fields;
  fields.reserve(frames.size());
  for (std::size_t k = 1; k < frames.size(); ++k) fields.push_back(flow_pair(frames[k - 1], frames[k], options));
  fields.push_back(fields.back());
  return stack(std::span<const Tensor<float>>(fields));
}

inline Tensor<float> flow_sequence(const FrameSequence& clip, const HornSchunckOptions& options = {}) {
  return flow_sequence(std::span<const Tensor<float>>(clip.frames), options);
}

}  // namespace accdet
