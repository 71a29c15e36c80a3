// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "accdet/train/synthetic.hpp"
#include "accdet/train/trainer.hpp"

namespace accdet::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kSuccess = 0, kUsage = 1, kData = 2, kNumeric = 3 };

// Flags shared by every command. Unset flags leave the configuration alone.
struct Overrides {
  std::optional<std::string> variant;
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> stride, depth, window_stride, epochs;
  std::optional<double> lr;
};

// Defaults come from the named builtin variant (trainable_twostream when none
// is named), then the config file, then explicit flags.
inline VariantConfig resolve_config(const Overrides& o) {
  VariantConfig cfg = builtin_variant(o.variant.value_or("trainable_twostream"));
  if (o.config) cfg = load_config_file(*o.config, cfg);
  if (o.seed) {
    cfg.model.seed = *o.seed;
    cfg.train.seed = *o.seed;
  }
  if (o.stride) cfg.pipeline.sample_stride = *o.stride;
  if (o.depth) cfg.pipeline.depth = *o.depth;
  if (o.window_stride) cfg.pipeline.window_stride = *o.window_stride;
  if (o.epochs) cfg.train.epochs = *o.epochs;
  if (o.lr) cfg.train.learning_rate = *o.lr;
  cfg.validate();
  return cfg;
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
}

// ---- preprocess ----

struct PreprocessSummary {
  std::size_t sources = 0, clips = 0, frames_dropped = 0;
};

inline PreprocessSummary preprocess_dir(const fs::path& frames_dir, const fs::path& out, const VariantConfig& cfg) {
  const auto cache = preprocess_sequence(read_frame_dir(frames_dir), cfg.pipeline, true);
  if (cache.rgb.empty()) throw DataError(frames_dir.string() + " is shorter than one five-second clip");
  save_clip_cache(out, cache);
  return {1, cache.rgb.size(), cache.frames_dropped};
}

inline PreprocessSummary preprocess_manifest(const DatasetManifest& m, const fs::path& cache_root,
                                             const VariantConfig& cfg) {
  PreprocessSummary total;
  for (const auto& row : m.rows) {
    const auto s = preprocess_dir(row.frames_dir, clip_cache_dir(cache_root, row), cfg);
    ++total.sources;
    total.clips += s.clips;
    total.frames_dropped += s.frames_dropped;
  }
  return total;
}

inline std::string format_preprocess(const PreprocessSummary& s) {
  return "sources=" + std::to_string(s.sources) + "\nclips=" + std::to_string(s.clips) +
         "\nframes_dropped=" + std::to_string(s.frames_dropped) + "\n";
}

// ---- train / eval ----

struct TrainResult {
  TrainHistory history;
  std::size_t train_examples = 0, val_examples = 0;
};

inline TrainResult train_command(const DatasetManifest& m, const fs::path& cache_root, const VariantConfig& cfg,
                                 const fs::path& out, std::ostream& log) {
  const bool two = cfg.model.two_stream;
  const auto train = load_split(m, Split::train, cache_root, cfg.pipeline, two);
  const auto val = load_split(m, Split::val, cache_root, cfg.pipeline, two);
  if (train.empty()) throw DataError("manifest has no training windows");
  Model<float> model(cfg.model);
  TrainOptions opt;
  opt.flow = cfg.pipeline.flow;
  opt.dump_dir = out / "divergence";
  opt.on_epoch = [&](const EpochRecord& r) {
    log << "epoch " << r.epoch << " loss " << detail::format_double(r.train_loss) << " accuracy "
        << detail::format_double(r.train_accuracy);
    if (r.val_accuracy) log << " val_accuracy " << detail::format_double(*r.val_accuracy);
    log << '\n';
  };
  TrainResult result;
  result.history = Trainer<float>(model, cfg.train, opt).fit(train, val);
  result.train_examples = train.size();
  result.val_examples = val.size();
  save_model(out, cfg, model);
  write_text(out / "history.csv", format_history(result.history));
  return result;
}

inline MetricsReport eval_command(const DatasetManifest& m, const fs::path& cache_root, Model<float>& model,
                                  const VariantConfig& cfg, Split split) {
  const auto ex = load_split(m, split, cache_root, cfg.pipeline, cfg.model.two_stream);
  if (ex.empty()) throw DataError("split '" + std::string(to_string(split)) + "' has no windows");
  return evaluate(model, std::span<const Example>(ex), cfg.name);
}

// ---- detect ----

struct WindowRecord {
  std::string clip_id;
  std::size_t start_index = 0;  // index of the first sampled frame
  double p_accident = 0;
  double ms = 0;
};

// Sliding-window detection over a frame stream. Frames are sampled, resized
// and buffered; a window is classified as soon as its last frame arrives, and
// at most T + S frames are ever held.
class StreamDetector {
 public:
  StreamDetector(Model<float>& model, PipelineConfig cfg, double threshold, std::string clip_id)
      : model_(model), cfg_(std::move(cfg)), threshold_(threshold), clip_id_(std::move(clip_id)) {
    if (cfg_.depth < 2) throw ConfigError("detection needs a window depth of at least 2");
  }

  std::optional<WindowRecord> push(const Tensor<float>& raw) {
    const std::size_t r = raw_seen_++;
    if (r % cfg_.sample_stride != 0) return std::nullopt;
    const std::size_t index = sampled_seen_++;
    if (skip_ > 0) {
      --skip_;
      return std::nullopt;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Tensor<float> frame = resize_bilinear(raw, cfg_.frame_size, cfg_.frame_size);
    if (frames_.empty()) first_index_ = index;
    if (model_.two_stream() && !frames_.empty()) fields_.push_back(flow_pair(frames_.back(), frame, cfg_.flow));
    frames_.push_back(std::move(frame));
    max_buffered_ = std::max(max_buffered_, frames_.size());
    if (frames_.size() < cfg_.depth) return std::nullopt;

    ModelInput<float> in;
    in.rgb = stack(std::span<const Tensor<float>>(std::vector<Tensor<float>>(frames_.begin(), frames_.end())));
    if (model_.two_stream()) {
      std::vector<Tensor<float>> f(fields_.begin(), fields_.end());
      f.push_back(f.back());
      in.flow = stack(std::span<const Tensor<float>>(f));
    }
    WindowRecord rec;
    rec.clip_id = clip_id_;
    rec.start_index = first_index_;
    rec.p_accident = model_.predict(in).probs.accident;
    rec.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    advance();
    any_accident_ = any_accident_ || is_accident(rec.p_accident, threshold_);
    ++windows_;
    return rec;
  }

  std::size_t windows() const { return windows_; }
  std::size_t sampled_frames() const { return sampled_seen_; }
  std::size_t max_buffered() const { return max_buffered_; }
  bool verdict_accident() const { return any_accident_; }

 private:
  void advance() {
    const std::size_t drop = std::min(cfg_.window_stride, frames_.size());
    for (std::size_t i = 0; i < drop; ++i) {
      frames_.pop_front();
      if (!fields_.empty()) fields_.pop_front();
    }
    first_index_ += drop;
    skip_ = cfg_.window_stride - drop;
  }

  Model<float>& model_;
  PipelineConfig cfg_;
  double threshold_;
  std::string clip_id_;
  std::deque<Tensor<float>> frames_;
  std::deque<Tensor<float>> fields_;  // fields_[i] is the flow from frames_[i] to frames_[i + 1]
  std::size_t raw_seen_ = 0, sampled_seen_ = 0, first_index_ = 0, skip_ = 0;
  std::size_t windows_ = 0, max_buffered_ = 0;
  bool any_accident_ = false;
};

inline std::string format_window(const WindowRecord& r) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", r.p_accident);
  return r.clip_id + "," + std::to_string(r.start_index) + "," + buf;
}

struct DetectSummary {
  std::size_t windows = 0;
  bool accident = false;
  std::size_t max_buffered = 0;
};

inline DetectSummary detect_command(const fs::path& frames_dir, Model<float>& model, const PipelineConfig& cfg,
                                    double threshold, const std::string& clip_id, std::ostream& out,
                                    std::ostream& timings) {
  FrameDirReader reader(frames_dir);
  StreamDetector det(model, cfg, threshold, clip_id);
  out << "clip_id,start_index,p_accident\n";
  while (auto frame = reader.next()) {
    if (auto rec = det.push(*frame)) {
      out << format_window(*rec) << '\n' << std::flush;
      timings << "window " << rec->start_index << " ms " << detail::format_double(rec->ms) << '\n';
    }
  }
  if (det.windows() == 0) {
    throw DataError("stream of " + std::to_string(det.sampled_frames()) + " sampled frames is shorter than depth " +
                    std::to_string(cfg.depth));
  }
  out << "#verdict=" << (det.verdict_accident() ? "accident" : "normal") << '\n';
  return {det.windows(), det.verdict_accident(), det.max_buffered()};
}

// ---- bench ----

struct BenchReport {
  std::string variant;
  std::size_t repetitions = 0, warmup = 0, depth = 0, frame_size = 0;
  std::vector<double> end_to_end_ms;
  double median_ms = 0, p95_ms = 0;
  double flow_ms = 0, backbone_ms = 0, head_ms = 0;  // per-stage medians
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

// Nearest-rank percentile.
inline double percentile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

// Times flow, backbones and head of one window, end to end and per stage, on
// seeded random frames. Warm-up runs are discarded.
inline BenchReport bench_command(Model<float>& model, const VariantConfig& cfg, std::size_t repetitions,
                                 std::size_t warmup) {
  if (repetitions == 0) throw ConfigError("bench needs at least one repetition");
  using clock = std::chrono::steady_clock;
  auto ms = [](clock::time_point a, clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
  };
  const std::size_t T = cfg.pipeline.depth, S = cfg.pipeline.frame_size;
  Rng rng(derive_seed(cfg.model.seed, 99));
  std::vector<Tensor<float>> frames;
  for (std::size_t t = 0; t < T; ++t) {
    Tensor<float> f({S, S, 3});
    fill_uniform(f, rng, 0.0, 1.0);
    frames.push_back(std::move(f));
  }
  const bool two = model.two_stream();
  auto end_to_end = [&]() {
    ModelInput<float> in;
    in.rgb = stack(std::span<const Tensor<float>>(frames));
    if (two) in.flow = flow_sequence(frames, cfg.pipeline.flow);
    return model.predict(in).probs.accident;
  };
  std::vector<double> total, flow, backbone, head;
  for (std::size_t i = 0; i < warmup + repetitions; ++i) {
    const auto a = clock::now();
    volatile double sink = end_to_end();
    (void)sink;
    const auto b = clock::now();

    const auto s0 = clock::now();
    ModelInput<float> in;
    in.rgb = stack(std::span<const Tensor<float>>(frames));
    if (two) in.flow = flow_sequence(frames, cfg.pipeline.flow);
    const auto s1 = clock::now();
    const auto feats = model.features(in);
    const auto s2 = clock::now();
    model.head_forward(std::span<const std::array<Tensor<float>, 2>>(&feats, 1), Mode::infer, nullptr, nullptr);
    const auto s3 = clock::now();
    if (i < warmup) continue;
    total.push_back(ms(a, b));
    flow.push_back(ms(s0, s1));
    backbone.push_back(ms(s1, s2));
    head.push_back(ms(s2, s3));
  }
  BenchReport r;
  r.variant = cfg.name;
  r.repetitions = repetitions;
  r.warmup = warmup;
  r.depth = T;
  r.frame_size = S;
  r.end_to_end_ms = total;
  r.median_ms = median(total);
  r.p95_ms = percentile(total, 0.95);
  r.flow_ms = median(flow);
  r.backbone_ms = median(backbone);
  r.head_ms = median(head);
  return r;
}

inline std::string format_bench(const BenchReport& r) {
  using detail::format_double;
  std::ostringstream os;
  os << "#variant=" << r.variant << '\n';
  os << "depth=" << r.depth << '\n';
  os << "frame_size=" << r.frame_size << '\n';
  os << "repetitions=" << r.repetitions << '\n';
  os << "warmup=" << r.warmup << '\n';
  os << "non_statistical=" << (r.repetitions == 1 ? "true" : "false") << '\n';
  os << "median_ms=" << format_double(r.median_ms) << '\n';
  os << "p95_ms=" << format_double(r.p95_ms) << '\n';
  os << "flow_ms=" << format_double(r.flow_ms) << '\n';
  os << "backbone_ms=" << format_double(r.backbone_ms) << '\n';
  os << "head_ms=" << format_double(r.head_ms) << '\n';
  os << "stage_sum_ms=" << format_double(r.flow_ms + r.backbone_ms + r.head_ms) << '\n';
  return os.str();
}

}  // namespace accdet::cli
