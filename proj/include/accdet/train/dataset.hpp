// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "accdet/core/tensor_io.hpp"
#include "accdet/flow/horn_schunck.hpp"
#include "accdet/model/config.hpp"
#include "accdet/train/manifest.hpp"
#include "accdet/video/frame_io.hpp"
#include "accdet/video/pipeline.hpp"

namespace accdet {

// Sampled clips of one source directory with their flow stacks.
struct ClipCache {
  std::vector<Tensor<float>> rgb;   // per clip, L x S x S x 3
  std::vector<Tensor<float>> flow;  // per clip, L x S x S x 2
  std::size_t frames_dropped = 0;
};

// Segments into five-second clips, samples every `sample_stride`-th frame,
// resizes to the model frame size and computes the flow of each clip.
inline ClipCache preprocess_sequence(const FrameSequence& raw, const PipelineConfig& cfg, bool with_flow = true) {
  raw.validate();
  ClipCache out;
  const auto clips = segment_clips(raw);
  out.frames_dropped = raw.size() - clips.size() * segment_length(raw.fps);
  for (const auto& clip : clips) {
    const auto sampled = resize_clip(sample_frames(clip, cfg.sample_stride), cfg.frame_size);
    out.rgb.push_back(sampled.to_tensor());
    if (with_flow) out.flow.push_back(flow_sequence(sampled, cfg.flow));
  }
  return out;
}

inline void save_clip_cache(const std::filesystem::path& dir, const ClipCache& cache) {
  std::map<std::string, const Tensor<float>*> tensors;
  for (std::size_t k = 0; k < cache.rgb.size(); ++k) {
    tensors.emplace("clip" + std::to_string(k) + ".rgb", &cache.rgb[k]);
    if (k < cache.flow.size()) tensors.emplace("clip" + std::to_string(k) + ".flow", &cache.flow[k]);
  }
  save_tensor_set(dir, tensors);
}

inline ClipCache load_clip_cache(const std::filesystem::path& dir, bool need_flow) {
  if (!std::filesystem::is_directory(dir)) {
    throw DataError("missing clip cache " + dir.string() + " (run preprocess first)");
  }
  auto tensors = load_tensor_set<float>(dir);
  ClipCache out;
  for (std::size_t k = 0;; ++k) {
    auto rgb = tensors.find("clip" + std::to_string(k) + ".rgb");
    if (rgb == tensors.end()) break;
    out.rgb.push_back(std::move(rgb->second));
    auto flow = tensors.find("clip" + std::to_string(k) + ".flow");
    if (flow != tensors.end()) {
      out.flow.push_back(std::move(flow->second));
    } else if (need_flow) {
      throw DataError("clip cache " + dir.string() + " has no flow stacks; the two-stream variant needs them");
    }
  }
  if (out.rgb.empty()) throw DataError("clip cache " + dir.string() + " holds no clips");
  return out;
}

// One classified unit: a depth-T window with its flow stack.
struct Example {
  Tensor<float> rgb;   // T x S x S x 3
  Tensor<float> flow;  // T x S x S x 2, empty for single-stream models
  Label label = Label::normal;
  std::string clip_id;
  std::size_t start_index = 0;
};

// Flow of a window equals the flow sequence of its own frames: the pair
// fields are shared with the clip, and the last field repeats the one before.
inline Tensor<float> window_flow(const Tensor<float>& clip_flow, std::size_t start, std::size_t depth) {
  auto w = slice_leading(clip_flow, start, depth);
  if (depth >= 2 && start + depth < clip_flow.dim(0)) {
    const std::size_t plane = w.size() / depth;
    std::copy_n(w.data() + (depth - 2) * plane, plane, w.data() + (depth - 1) * plane);
  }
  return w;
}

inline std::vector<Example> cache_examples(const ClipCache& cache, const ManifestRow& row, const PipelineConfig& cfg,
                                           bool with_flow) {
  std::vector<Example> out;
  for (std::size_t k = 0; k < cache.rgb.size(); ++k) {
    const auto& rgb = cache.rgb[k];
    if (rgb.rank() != 4 || rgb.dim(1) != cfg.frame_size || rgb.dim(2) != cfg.frame_size) {
      throw DataError("clip cache for '" + row.clip_id + "' has frames " + shape_string(rgb.dims()) +
                      ", config expects " + std::to_string(cfg.frame_size) + "x" + std::to_string(cfg.frame_size));
    }
    const std::size_t L = rgb.dim(0);
    for (std::size_t s = 0; s + cfg.depth <= L; s += cfg.window_stride) {
      Example e;
      e.rgb = slice_leading(rgb, s, cfg.depth);
      if (with_flow) e.flow = window_flow(cache.flow.at(k), s, cfg.depth);
      e.label = row.label;
      e.clip_id = row.clip_id + "_c" + std::to_string(k);
      e.start_index = s;
      out.push_back(std::move(e));
    }
  }
  return out;
}

inline std::filesystem::path clip_cache_dir(const std::filesystem::path& cache_root, const ManifestRow& row) {
  return cache_root / row.clip_id;
}

// Examples of one split, read from caches written by preprocess.
inline std::vector<Example> load_split(const DatasetManifest& manifest, Split split,
                                       const std::filesystem::path& cache_root, const PipelineConfig& cfg,
                                       bool with_flow) {
  std::vector<Example> out;
  for (const auto& row : manifest.split(split)) {
    auto ex = cache_examples(load_clip_cache(clip_cache_dir(cache_root, row), with_flow), row, cfg, with_flow);
    for (auto& e : ex) out.push_back(std::move(e));
  }
  return out;
}

// Examples of one split computed straight from the frame directories.
inline std::vector<Example> build_split(const DatasetManifest& manifest, Split split, const PipelineConfig& cfg,
                                        bool with_flow) {
  std::vector<Example> out;
  for (const auto& row : manifest.split(split)) {
    auto cache = preprocess_sequence(read_frame_dir(row.frames_dir, row.clip_id), cfg, with_flow);
    auto ex = cache_examples(cache, row, cfg, with_flow);
    for (auto& e : ex) out.push_back(std::move(e));
  }
  return out;
}

}  // namespace accdet
