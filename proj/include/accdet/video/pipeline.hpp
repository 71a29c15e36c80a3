// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include "accdet/video/frame_sequence.hpp"

namespace accdet {

inline constexpr double kSegmentSeconds = 5.0;
inline constexpr std::size_t kModelFrameSize = 224;

// Fixed-depth run of sampled frames classified as one unit.
struct Window {
  Tensor<float> frames;  // T x H x W x 3
  std::size_t start_index = 0;
  std::string clip_id;
};

inline std::size_t segment_length(double fps) {
  if (!(fps > 0.0) || !std::isfinite(fps)) throw ShapeError("segment_clips: fps must be > 0");
  return static_cast<std::size_t>(std::llround(kSegmentSeconds * fps));
}

// Consecutive non-overlapping five-second clips; the remainder is dropped.
inline std::vector<FrameSequence> segment_clips(const FrameSequence& raw) {
  const std::size_t len = segment_length(raw.fps);
  std::vector<FrameSequence> clips;
  if (len == 0) return clips;
  for (std::size_t start = 0; start + len <= raw.size(); start += len) {
    FrameSequence clip;
    clip.fps = raw.fps;
    clip.source_id = raw.source_id + "_c" + std::to_string(clips.size());
    clip.frames.assign(raw.frames.begin() + static_cast<std::ptrdiff_t>(start),
                       raw.frames.begin() + static_cast<std::ptrdiff_t>(start + len));
    clips.push_back(std::move(clip));
  }
  return clips;
}

inline std::size_t sampled_length(std::size_t n, std::size_t stride) {
  return (n + stride - 1) / stride;
}

// Keeps frames 0, stride, 2*stride, ... The frame rate scales down accordingly.
inline FrameSequence sample_frames(const FrameSequence& clip, std::size_t stride) {
  if (stride == 0) throw ShapeError("sample_frames: stride must be >= 1");
  if (clip.empty()) throw ShapeError("sample_frames: empty clip");
  FrameSequence out;
  out.fps = clip.fps / static_cast<double>(stride);
  out.source_id = clip.source_id;
  out.frames.reserve(sampled_length(clip.size(), stride));
  for (std::size_t i = 0; i < clip.size(); i += stride) out.frames.push_back(clip.frames[i]);
  return out;
}

// Bilinear resize with corner-aligned sampling; channels are independent.
template <class T>
Tensor<T> resize_bilinear(const Tensor<T>& frame, std::size_t out_h, std::size_t out_w) {
  if (frame.rank() != 3) throw ShapeError("resize_bilinear expects H x W x C");
  const std::size_t H = frame.dim(0), W = frame.dim(1), C = frame.dim(2);
  if (H < 2 || W < 2) throw ShapeError("resize_bilinear: degenerate input " + shape_string(frame.dims()));
  if (out_h == 0 || out_w == 0) throw ShapeError("resize_bilinear: empty target");
  if (H == out_h && W == out_w) return frame;
  Tensor<T> out({out_h, out_w, C});
  const double sy = out_h > 1 ? static_cast<double>(H - 1) / static_cast<double>(out_h - 1) : 0.0;
  const double sx = out_w > 1 ? static_cast<double>(W - 1) / static_cast<double>(out_w - 1) : 0.0;
  for (std::size_t y = 0; y < out_h; ++y) {
    const double fy = static_cast<double>(y) * sy;
    const std::size_t y0 = std::min(static_cast<std::size_t>(fy), H - 2);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < out_w; ++x) {
      const double fx = static_cast<double>(x) * sx;
      const std::size_t x0 = std::min(static_cast<std::size_t>(fx), W - 2);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < C; ++c) {
        const double p00 = frame[(y0 * W + x0) * C + c], p01 = frame[(y0 * W + x0 + 1) * C + c];
        const double p10 = frame[((y0 + 1) * W + x0) * C + c], p11 = frame[((y0 + 1) * W + x0 + 1) * C + c];
        const double top = p00 + (p01 - p00) * wx, bottom = p10 + (p11 - p10) * wx;
        out[(y * out_w + x) * C + c] = static_cast<T>(top + (bottom - top) * wy);
      }
    }
  }
  return out;
}

template <class T>
Tensor<T> resize_bilinear(const Tensor<T>& frame, std::size_t size = kModelFrameSize) {
  return resize_bilinear(frame, size, size);
}

// Integer pixels in [0, 255] -> x / 255.
template <class I>
Tensor<float> normalize(const Tensor<I>& frame) {
  static_assert(std::is_integral_v<I>, "normalize expects integer pixels");
  Tensor<float> out(frame.dims());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const auto v = frame[i];
    if (v < 0 || v > 255) throw DataError("pixel value " + std::to_string(v) + " outside [0, 255]");
    out[i] = static_cast<float>(v) / 255.0f;
  }
  return out;
}

inline std::size_t window_count(std::size_t n, std::size_t depth, std::size_t stride) {
  if (depth == 0 || stride == 0) throw ShapeError("window depth and stride must be >= 1");
  if (n < depth) return 0;
  return (n - depth) / stride + 1;
}

// Windows of `depth` frames starting at 0, stride, 2*stride, ... while they fit.
inline std::vector<Window> make_windows(const FrameSequence& clip, std::size_t depth, std::size_t stride) {
  if (depth == 0 || stride == 0) throw ShapeError("window depth and stride must be >= 1");
  if (clip.size() < depth) {
    throw ShapeError("make_windows: clip of " + std::to_string(clip.size()) + " frames is shorter than depth " +
                     std::to_string(depth));
  }
  std::vector<Window> out;
  for (std::size_t start = 0; start + depth <= clip.size(); start += stride) {
    std::span<const Tensor<float>> part(clip.frames.data() + start, depth);
    out.push_back(Window{stack(part), start, clip.source_id});
  }
  return out;
}

// Resizes every frame to size x size (a no-op when already there).
inline FrameSequence resize_clip(const FrameSequence& clip, std::size_t size) {
  FrameSequence out;
  out.fps = clip.fps;
  out.source_id = clip.source_id;
  out.frames.reserve(clip.size());
  for (const auto& f : clip.frames) out.frames.push_back(resize_bilinear(f, size, size));
  return out;
}

}  // namespace accdet
