// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

// Moving-square scenes: two squares that collide and stop ("accident") or
// pass each other in separate lanes ("normal").

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "accdet/core/random.hpp"
#include "accdet/core/softmax.hpp"
#include "accdet/train/manifest.hpp"
#include "accdet/video/frame_io.hpp"

namespace accdet {

struct SyntheticOptions {
  std::size_t frame_size = 32;
  std::size_t frames = 40;
  double fps = 8.0;
  double square = 6.0;
  double noise = 0.02;
};

namespace detail {

struct Box {
  double x, y, size;
  std::array<float, 3> color;
};

inline double overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

inline void draw_box(Tensor<float>& frame, const Box& b) {
  const std::size_t H = frame.dim(0), W = frame.dim(1);
  for (std::size_t y = 0; y < H; ++y) {
    const double cy = overlap(static_cast<double>(y), static_cast<double>(y) + 1.0, b.y, b.y + b.size);
    if (cy <= 0.0) continue;
    for (std::size_t x = 0; x < W; ++x) {
      const double c = cy * overlap(static_cast<double>(x), static_cast<double>(x) + 1.0, b.x, b.x + b.size);
      if (c <= 0.0) continue;
      for (std::size_t ch = 0; ch < 3; ++ch) {
        float& v = frame.at(y, x, ch);
        v = static_cast<float>((1.0 - c) * v + c * b.color[ch]);
      }
    }
  }
}

}  // namespace detail

inline FrameSequence synthetic_scene(Label label, std::uint64_t seed, const SyntheticOptions& opt = {}) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double S = static_cast<double>(opt.frame_size), sq = opt.square;
  const double n = static_cast<double>(opt.frames);
  const float bg = static_cast<float>(0.15 + 0.2 * u(rng));
  auto color = [&]() {
    return std::array<float, 3>{static_cast<float>(0.6 + 0.4 * u(rng)), static_cast<float>(0.6 + 0.4 * u(rng)),
                                static_cast<float>(0.6 + 0.4 * u(rng))};
  };
  const auto ca = color(), cb = color();
  const bool accident = label == Label::accident;
  const double lane_a = sq + u(rng) * (S - 3.0 * sq);
  double lane_b = lane_a + (u(rng) < 0.5 ? -1.0 : 1.0) * (sq + 3.0 + u(rng) * 4.0);
  if (lane_b < 0.0 || lane_b + sq > S) lane_b = lane_a > S / 2.0 ? lane_a - sq - 4.0 : lane_a + sq + 4.0;
  if (accident) lane_b = lane_a + (u(rng) - 0.5) * 2.0;
  // Both squares head for a meeting point near the centre at a random time.
  const double meet_t = n * (0.4 + 0.2 * u(rng));
  const double meet_x = S / 2.0 + (u(rng) - 0.5) * 4.0;
  const double speed = (meet_x - sq) / meet_t * (0.8 + 0.4 * u(rng));
  FrameSequence seq;
  seq.fps = opt.fps;
  std::normal_distribution<double> noise(0.0, opt.noise);
  for (std::size_t t = 0; t < opt.frames; ++t) {
    const double tt = accident ? std::min(static_cast<double>(t), meet_t) : static_cast<double>(t);
    const double xa = meet_x - sq - speed * (meet_t - tt);
    const double xb = meet_x + speed * (meet_t - tt);
    Tensor<float> frame({opt.frame_size, opt.frame_size, 3}, bg);
    detail::draw_box(frame, {xa, lane_a, sq, ca});
    detail::draw_box(frame, {xb, lane_b, sq, cb});
    for (auto& v : frame.values()) v = std::clamp(static_cast<float>(v + noise(rng)), 0.0f, 1.0f);
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

struct SyntheticSplitSizes {
  std::size_t train = 20, val = 0, test = 10;
};

// Writes balanced frame directories under `dir/frames` plus `dir/manifest.csv`
// and returns the manifest. Labels alternate accident, normal, ...
inline DatasetManifest write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticSplitSizes& sizes,
                                               std::uint64_t seed, const SyntheticOptions& opt = {}) {
  DatasetManifest m;
  std::size_t serial = 0;
  auto emit = [&](Split split, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i, ++serial) {
      ManifestRow r;
      r.clip_id = std::string(to_string(split)) + "_" + std::to_string(i);
      r.label = i % 2 == 0 ? Label::accident : Label::normal;
      r.split = split;
      r.source = (i / 2) % 2 == 0 ? Source::trafficam : Source::dashcam;
      r.frames_dir = dir / "frames" / r.clip_id;
      write_frame_dir(r.frames_dir, synthetic_scene(r.label, derive_seed(seed, serial), opt));
      m.rows.push_back(std::move(r));
    }
  };
  emit(Split::train, sizes.train);
  emit(Split::val, sizes.val);
  emit(Split::test, sizes.test);
  std::ofstream f(dir / "manifest.csv", std::ios::trunc);
  if (!f) throw DataError("cannot write " + (dir / "manifest.csv").string());
  f << format_manifest(m, dir);
  return m;
}

}  // namespace accdet
