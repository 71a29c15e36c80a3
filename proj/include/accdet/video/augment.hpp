// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "accdet/core/random.hpp"
#include "accdet/video/frame_sequence.hpp"

namespace accdet {

inline constexpr double kMaxRotationDegrees = 10.0;

struct Range {
  double lo = 1.0, hi = 1.0;
};

// Geometric clip augmentation policy. Horizontal flips only; there is no way
// to request a vertical flip.
struct AugmentationSpec {
  Range crop_fraction{0.8, 1.0};
  Range zoom{1.0, 1.2};
  double rotation_cap_degrees = 10.0;
  double horizontal_flip_probability = 0.5;
  std::uint64_t seed = 0;

  static AugmentationSpec identity() { return {{1.0, 1.0}, {1.0, 1.0}, 0.0, 0.0, 0}; }

  void validate() const {
    if (!(rotation_cap_degrees >= 0.0) || rotation_cap_degrees > kMaxRotationDegrees) {
      throw ShapeError("augmentation rotation cap must lie in [0, 10] degrees");
    }
    if (!(crop_fraction.lo > 0.0) || crop_fraction.hi > 1.0 || crop_fraction.lo > crop_fraction.hi) {
      throw ShapeError("augmentation crop fraction range must lie in (0, 1]");
    }
    if (!(zoom.lo > 0.0) || zoom.lo > zoom.hi) throw ShapeError("augmentation zoom range invalid");
    if (!(horizontal_flip_probability >= 0.0 && horizontal_flip_probability <= 1.0)) {
      throw ShapeError("horizontal flip probability must lie in [0, 1]");
    }
  }
};

// One concrete draw from an AugmentationSpec, applied to every frame of a clip.
struct AugmentTransform {
  double crop_fraction = 1.0;
  double crop_offset_x = 0.0;  // fraction of the horizontal slack, in [0, 1]
  double crop_offset_y = 0.0;
  double zoom = 1.0;
  double rotation_degrees = 0.0;
  bool horizontal_flip = false;

  static AugmentTransform rotation(double degrees) {
    AugmentTransform t;
    t.rotation_degrees = degrees;
    return t;
  }
  static AugmentTransform flip() {
    AugmentTransform t;
    t.horizontal_flip = true;
    return t;
  }
};

inline AugmentTransform sample_transform(const AugmentationSpec& spec, Rng& rng) {
  spec.validate();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](Range r) { return r.lo + (r.hi - r.lo) * unit(rng); };
  AugmentTransform t;
  t.crop_fraction = draw(spec.crop_fraction);
  t.crop_offset_x = unit(rng);
  t.crop_offset_y = unit(rng);
  t.zoom = draw(spec.zoom);
  t.rotation_degrees = spec.rotation_cap_degrees * (2.0 * unit(rng) - 1.0);
  t.horizontal_flip = unit(rng) < spec.horizontal_flip_probability;
  return t;
}

// Output pixels are pulled back through flip, rotation about the centre,
// centre zoom and crop, then bilinearly sampled with zero fill.
inline Tensor<float> apply_transform(const Tensor<float>& frame, const AugmentTransform& t) {
  if (frame.rank() != 3) throw ShapeError("augment expects H x W x C frames");
  if (std::abs(t.rotation_degrees) > kMaxRotationDegrees) throw ShapeError("rotation exceeds the 10 degree cap");
  const std::size_t H = frame.dim(0), W = frame.dim(1), C = frame.dim(2);
  Tensor<float> out(frame.dims());
  const double cx = (static_cast<double>(W) - 1.0) / 2.0, cy = (static_cast<double>(H) - 1.0) / 2.0;
  const double theta = t.rotation_degrees * std::numbers::pi / 180.0;
  const double cs = t.rotation_degrees == 0.0 ? 1.0 : std::cos(theta);
  const double sn = t.rotation_degrees == 0.0 ? 0.0 : std::sin(theta);
  const double span_x = static_cast<double>(W) - 1.0, span_y = static_cast<double>(H) - 1.0;
  const double x0 = t.crop_offset_x * span_x * (1.0 - t.crop_fraction);
  const double y0 = t.crop_offset_y * span_y * (1.0 - t.crop_fraction);
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      double px = t.horizontal_flip ? span_x - static_cast<double>(x) : static_cast<double>(x);
      double py = static_cast<double>(y);
      const double rx = cx + cs * (px - cx) + sn * (py - cy);
      const double ry = cy - sn * (px - cx) + cs * (py - cy);
      px = cx + (rx - cx) / t.zoom;
      py = cy + (ry - cy) / t.zoom;
      px = x0 + px * t.crop_fraction;
      py = y0 + py * t.crop_fraction;
      float* dst = out.data() + (y * W + x) * C;
      if (px < 0.0 || py < 0.0 || px > span_x || py > span_y) continue;
      const std::size_t ix = W > 1 ? std::min(static_cast<std::size_t>(px), W - 2) : 0;
      const std::size_t iy = H > 1 ? std::min(static_cast<std::size_t>(py), H - 2) : 0;
      const double wx = W > 1 ? px - static_cast<double>(ix) : 0.0;
      const double wy = H > 1 ? py - static_cast<double>(iy) : 0.0;
      const std::size_t ix1 = W > 1 ? ix + 1 : ix, iy1 = H > 1 ? iy + 1 : iy;
      for (std::size_t c = 0; c < C; ++c) {
        const double p00 = frame[(iy * W + ix) * C + c], p01 = frame[(iy * W + ix1) * C + c];
        const double p10 = frame[(iy1 * W + ix) * C + c], p11 = frame[(iy1 * W + ix1) * C + c];
        const double top = (1.0 - wx) * p00 + wx * p01;
        const double bottom = (1.0 - wx) * p10 + wx * p11;
        dst[c] = static_cast<float>((1.0 - wy) * top + wy * bottom);
      }
    }
  }
  return out;
}

inline FrameSequence apply_transform(const FrameSequence& clip, const AugmentTransform& t) {
  FrameSequence out;
  out.fps = clip.fps;
  out.source_id = clip.source_id;
  out.frames.reserve(clip.size());
  for (const auto& f : clip.frames) out.frames.push_back(apply_transform(f, t));
  return out;
}

// Draws one transform from the spec's seed and applies it to every frame.
inline FrameSequence augment(const FrameSequence& clip, const AugmentationSpec& spec) {
  Rng rng(spec.seed);
  return apply_transform(clip, sample_transform(spec, rng));
}

}  // namespace accdet
