// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "accdet/core/conv.hpp"
#include "accdet/flow/horn_schunck.hpp"
#include "accdet/video/augment.hpp"

namespace accdet {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class StageKind { conv, maxpool, inception };

// One backbone stage. Convolutions use "same" padding and are followed by ReLU.
//   conv:      kernel, filters, stride
//   maxpool:   kernel (window), stride
//   inception: parallel 1x1x1 branch (branch1x1 filters) and a 1x1x1 reduce
//              (reduce filters) feeding a 3x3x3 branch (branch3x3 filters),
//              concatenated; both branches apply `stride`.
struct StageConfig {
  StageKind kind = StageKind::conv;
  Extent3 kernel{1, 1, 1};
  Extent3 stride{1, 1, 1};
  std::size_t filters = 0;
  std::size_t branch1x1 = 0, reduce = 0, branch3x3 = 0;

  std::size_t conv_layers() const {
    switch (kind) {
      case StageKind::conv: return 1;
      case StageKind::maxpool: return 0;
      case StageKind::inception: return 3;
    }
    return 0;
  }
  std::size_t output_channels(std::size_t in) const {
    switch (kind) {
      case StageKind::conv: return filters;
      case StageKind::maxpool: return in;
      case StageKind::inception: return branch1x1 + branch3x3;
    }
    return in;
  }
};

struct BackboneConfig {
  std::vector<StageConfig> stages;
  std::size_t trainable_last_n = 0;
  std::size_t input_channels = 3;

  std::size_t conv_layer_count() const {
    std::size_t n = 0;
    for (const auto& s : stages) n += s.conv_layers();
    return n;
  }

  // Closed-form output extents for a T x H x W x C input.
  Shape output_dims(const Shape& input) const {
    if (input.size() != 4) throw ShapeError("backbone input must be T x H x W x C");
    Shape d = input;
    for (const auto& s : stages) {
      const auto gt = axis_geometry(d[0], s.kind == StageKind::inception ? 1 : s.kernel.t, s.stride.t, Padding::same);
      const auto gh = axis_geometry(d[1], 1, s.stride.h, Padding::same);
      const auto gw = axis_geometry(d[2], 1, s.stride.w, Padding::same);
      d = {gt.out, gh.out, gw.out, s.output_channels(d[3])};
    }
    return d;
  }

  void validate() const {
    if (stages.empty()) throw ConfigError("backbone needs at least one stage");
    if (trainable_last_n > conv_layer_count()) {
      throw ConfigError("trainable_last_n (" + std::to_string(trainable_last_n) + ") exceeds layer count (" +
                        std::to_string(conv_layer_count()) + ")");
    }
    if (input_channels == 0) throw ConfigError("backbone input channels must be >= 1");
    for (const auto& s : stages) {
      if (s.stride.t == 0 || s.stride.h == 0 || s.stride.w == 0) throw ConfigError("stage stride must be >= 1");
      if (s.kernel.t == 0 || s.kernel.h == 0 || s.kernel.w == 0) throw ConfigError("stage kernel must be >= 1");
      if (s.kind == StageKind::conv && s.filters == 0) throw ConfigError("conv stage needs filters");
      if (s.kind == StageKind::inception && (s.branch1x1 == 0 || s.reduce == 0 || s.branch3x3 == 0)) {
        throw ConfigError("inception stage needs branch1x1, reduce and branch3x3");
      }
    }
  }

  // Checks that strides/windows leave every extent >= 1 for this input.
  void validate_input(const Shape& input) const {
    validate();
    Shape d = input;
    for (const auto& s : stages) {
      if (s.kind == StageKind::maxpool && (s.kernel.t > d[0] || s.kernel.h > d[1] || s.kernel.w > d[2])) {
        throw ConfigError("pool window larger than its input " + shape_string(d));
      }
      d = BackboneConfig{{s}, 0, d[3]}.output_dims(d);
    }
  }
};

struct HeadConfig {
  std::vector<std::size_t> convlstm_filters{64, 32, 32};
  std::size_t kernel = 3;
  bool batchnorm_before_gap = false;
  std::vector<std::size_t> dense{512, 256, 256};
  double dropout = 0.3;
  std::size_t classes = 2;

  void validate() const {
    if (convlstm_filters.empty()) throw ConfigError("head needs at least one ConvLSTM layer");
    for (auto f : convlstm_filters) {
      if (f == 0) throw ConfigError("ConvLSTM filter counts must be positive");
    }
    for (auto w : dense) {
      if (w == 0) throw ConfigError("dense widths must be positive");
    }
    if (kernel == 0 || kernel % 2 == 0) throw ConfigError("ConvLSTM kernel must be odd and positive");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
    if (classes != 2) throw ConfigError("only two classes are supported");
  }
};

struct ModelConfig {
  bool two_stream = true;
  BackboneConfig backbone;
  HeadConfig head;
  std::uint64_t seed = 0;
};

struct PipelineConfig {
  std::size_t frame_size = 224;
  std::size_t sample_stride = 5;
  std::size_t depth = 30;
  std::size_t window_stride = 15;
  HornSchunckOptions flow;
};

enum class OptimizerKind { adam, sgd };

struct TrainConfig {
  std::size_t epochs = 30;
  double learning_rate = 1e-4;
  std::size_t batch_size = 4;
  OptimizerKind optimizer = OptimizerKind::adam;
  std::uint64_t seed = 0;
  bool class_weights = false;
  bool augment = false;
  AugmentationSpec augmentation;

  void validate() const {
    if (epochs == 0) throw ConfigError("epochs must be >= 1");
    if (!(learning_rate >= 0.0)) throw ConfigError("learning rate must be >= 0");
    if (batch_size == 0) throw ConfigError("batch size must be >= 1");
    augmentation.validate();
  }
};

// Everything one named experimental variant fixes.
struct VariantConfig {
  std::string name = "custom";
  ModelConfig model;
  PipelineConfig pipeline;
  TrainConfig train;

  void validate() const {
    model.backbone.validate();
    model.head.validate();
    train.validate();
    if (pipeline.depth == 0 || pipeline.window_stride == 0 || pipeline.sample_stride == 0) {
      throw ConfigError("pipeline depth and strides must be >= 1");
    }
    if (pipeline.frame_size < 2) throw ConfigError("frame size must be >= 2");
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::size_t parse_size(std::string_view key, std::string_view v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw ConfigError("'" + std::string(key) + "': expected a non-negative integer, got '" + std::string(v) + "'");
  }
  return out;
}

inline double parse_double(std::string_view key, std::string_view v) {
  try {
    std::size_t used = 0;
    const std::string s(v);
    const double d = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("");
    return d;
  } catch (const std::exception&) {
    throw ConfigError("'" + std::string(key) + "': expected a number, got '" + std::string(v) + "'");
  }
}

inline bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + std::string(key) + "': expected true|false, got '" + std::string(v) + "'");
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::size_t> parse_size_list(std::string_view key, std::string_view v) {
  std::vector<std::size_t> out;
  if (trim(v).empty()) return out;
  for (const auto& part : split(v, ',')) out.push_back(parse_size(key, part));
  return out;
}

inline Extent3 parse_extent(std::string_view key, std::string_view v) {
  const auto parts = split(v, 'x');
  if (parts.size() != 3) throw ConfigError("'" + std::string(key) + "': expected TxHxW, got '" + std::string(v) + "'");
  return {parse_size(key, parts[0]), parse_size(key, parts[1]), parse_size(key, parts[2])};
}

inline std::string format_extent(Extent3 e) {
  return std::to_string(e.t) + "x" + std::to_string(e.h) + "x" + std::to_string(e.w);
}

inline std::string format_list(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

inline std::string format_double(double d) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, p);
}

}  // namespace detail

// "conv kernel=7x7x7 filters=64 stride=2x2x2", "maxpool window=1x3x3 stride=1x2x2",
// "inception b1x1=32 reduce=48 b3x3=64 stride=2x2x2".
inline StageConfig parse_stage(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string kind;
  is >> kind;
  StageConfig s;
  if (kind == "conv") {
    s.kind = StageKind::conv;
  } else if (kind == "maxpool") {
    s.kind = StageKind::maxpool;
  } else if (kind == "inception") {
    s.kind = StageKind::inception;
  } else {
    throw ConfigError("unknown backbone stage kind '" + kind + "'");
  }
  std::string item;
  while (is >> item) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("malformed stage attribute '" + item + "'");
    const std::string k = item.substr(0, eq), v = item.substr(eq + 1);
    if (k == "kernel" || k == "window") {
      s.kernel = detail::parse_extent(k, v);
    } else if (k == "stride") {
      s.stride = detail::parse_extent(k, v);
    } else if (k == "filters") {
      s.filters = detail::parse_size(k, v);
    } else if (k == "b1x1") {
      s.branch1x1 = detail::parse_size(k, v);
    } else if (k == "reduce") {
      s.reduce = detail::parse_size(k, v);
    } else if (k == "b3x3") {
      s.branch3x3 = detail::parse_size(k, v);
    } else {
      throw ConfigError("unknown stage attribute '" + k + "'");
    }
  }
  if (s.kind == StageKind::inception) s.kernel = {3, 3, 3};
  return s;
}

inline std::string format_stage(const StageConfig& s) {
  switch (s.kind) {
    case StageKind::conv:
      return "conv kernel=" + detail::format_extent(s.kernel) + " filters=" + std::to_string(s.filters) +
             " stride=" + detail::format_extent(s.stride);
    case StageKind::maxpool:
      return "maxpool window=" + detail::format_extent(s.kernel) + " stride=" + detail::format_extent(s.stride);
    case StageKind::inception:
      return "inception b1x1=" + std::to_string(s.branch1x1) + " reduce=" + std::to_string(s.reduce) +
             " b3x3=" + std::to_string(s.branch3x3) + " stride=" + detail::format_extent(s.stride);
  }
  return {};
}

// Applies "key=value" lines on top of `cfg`. Blank lines and '#' comments are
// ignored. The first backbone.stage line of a text replaces the stage list.
inline void apply_config_text(VariantConfig& cfg, std::string_view text, const std::string& origin = "config") {
  std::istringstream is{std::string(text)};
  std::string raw;
  std::size_t line_no = 0;
  bool stages_reset = false;
  while (std::getline(is, raw)) {
    ++line_no;
    const std::string line = detail::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    try {
      if (key == "variant") {
        cfg.name = val;
      } else if (key == "model.streams") {
        if (val == "rgb") {
          cfg.model.two_stream = false;
        } else if (val == "rgb+flow") {
          cfg.model.two_stream = true;
        } else {
          throw ConfigError("model.streams must be rgb or rgb+flow");
        }
      } else if (key == "model.seed") {
        cfg.model.seed = detail::parse_size(key, val);
      } else if (key == "backbone.stage") {
        if (!stages_reset) {
          cfg.model.backbone.stages.clear();
          stages_reset = true;
        }
        cfg.model.backbone.stages.push_back(parse_stage(val));
      } else if (key == "backbone.trainable_last_n") {
        cfg.model.backbone.trainable_last_n = detail::parse_size(key, val);
      } else if (key == "head.convlstm_filters") {
        cfg.model.head.convlstm_filters = detail::parse_size_list(key, val);
      } else if (key == "head.kernel") {
        cfg.model.head.kernel = detail::parse_size(key, val);
      } else if (key == "head.batchnorm_before_gap") {
        cfg.model.head.batchnorm_before_gap = detail::parse_bool(key, val);
      } else if (key == "head.dense") {
        cfg.model.head.dense = detail::parse_size_list(key, val);
      } else if (key == "head.dropout") {
        cfg.model.head.dropout = detail::parse_double(key, val);
      } else if (key == "input.frame_size") {
        cfg.pipeline.frame_size = detail::parse_size(key, val);
      } else if (key == "input.sample_stride") {
        cfg.pipeline.sample_stride = detail::parse_size(key, val);
      } else if (key == "input.depth") {
        cfg.pipeline.depth = detail::parse_size(key, val);
      } else if (key == "input.window_stride") {
        cfg.pipeline.window_stride = detail::parse_size(key, val);
      } else if (key == "flow.alpha") {
        cfg.pipeline.flow.alpha = detail::parse_double(key, val);
      } else if (key == "flow.iterations") {
        cfg.pipeline.flow.iterations = detail::parse_size(key, val);
      } else if (key == "train.epochs") {
        cfg.train.epochs = detail::parse_size(key, val);
      } else if (key == "train.learning_rate") {
        cfg.train.learning_rate = detail::parse_double(key, val);
      } else if (key == "train.batch_size") {
        cfg.train.batch_size = detail::parse_size(key, val);
      } else if (key == "train.optimizer") {
        if (val == "adam") {
          cfg.train.optimizer = OptimizerKind::adam;
        } else if (val == "sgd") {
          cfg.train.optimizer = OptimizerKind::sgd;
        } else {
          throw ConfigError("train.optimizer must be adam or sgd");
        }
      } else if (key == "train.seed") {
        cfg.train.seed = detail::parse_size(key, val);
      } else if (key == "train.class_weights") {
        cfg.train.class_weights = detail::parse_bool(key, val);
      } else if (key == "train.augment") {
        cfg.train.augment = detail::parse_bool(key, val);
      } else if (key == "augment.crop_fraction") {
        const auto p = detail::split(val, ',');
        if (p.size() != 2) throw ConfigError("expected lo,hi");
        cfg.train.augmentation.crop_fraction = {detail::parse_double(key, p[0]), detail::parse_double(key, p[1])};
      } else if (key == "augment.zoom") {
        const auto p = detail::split(val, ',');
        if (p.size() != 2) throw ConfigError("expected lo,hi");
        cfg.train.augmentation.zoom = {detail::parse_double(key, p[0]), detail::parse_double(key, p[1])};
      } else if (key == "augment.rotation_cap_degrees") {
        cfg.train.augmentation.rotation_cap_degrees = detail::parse_double(key, val);
      } else if (key == "augment.horizontal_flip_probability") {
        cfg.train.augmentation.horizontal_flip_probability = detail::parse_double(key, val);
      } else {
        throw ConfigError("unknown key");
      }
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + key + ": " + e.what());
    }
  }
  cfg.model.backbone.input_channels = 3;
}

inline std::string format_config(const VariantConfig& c) {
  std::ostringstream os;
  os << "variant=" << c.name << '\n';
  os << "model.streams=" << (c.model.two_stream ? "rgb+flow" : "rgb") << '\n';
  os << "model.seed=" << c.model.seed << '\n';
  for (const auto& s : c.model.backbone.stages) os << "backbone.stage=" << format_stage(s) << '\n';
  os << "backbone.trainable_last_n=" << c.model.backbone.trainable_last_n << '\n';
  os << "head.convlstm_filters=" << detail::format_list(c.model.head.convlstm_filters) << '\n';
  os << "head.kernel=" << c.model.head.kernel << '\n';
  os << "head.batchnorm_before_gap=" << (c.model.head.batchnorm_before_gap ? "true" : "false") << '\n';
  os << "head.dense=" << detail::format_list(c.model.head.dense) << '\n';
  os << "head.dropout=" << detail::format_double(c.model.head.dropout) << '\n';
  os << "input.frame_size=" << c.pipeline.frame_size << '\n';
  os << "input.sample_stride=" << c.pipeline.sample_stride << '\n';
  os << "input.depth=" << c.pipeline.depth << '\n';
  os << "input.window_stride=" << c.pipeline.window_stride << '\n';
  os << "flow.alpha=" << detail::format_double(c.pipeline.flow.alpha) << '\n';
  os << "flow.iterations=" << c.pipeline.flow.iterations << '\n';
  os << "train.epochs=" << c.train.epochs << '\n';
  os << "train.learning_rate=" << detail::format_double(c.train.learning_rate) << '\n';
  os << "train.batch_size=" << c.train.batch_size << '\n';
  os << "train.optimizer=" << (c.train.optimizer == OptimizerKind::adam ? "adam" : "sgd") << '\n';
  os << "train.seed=" << c.train.seed << '\n';
  os << "train.class_weights=" << (c.train.class_weights ? "true" : "false") << '\n';
  os << "train.augment=" << (c.train.augment ? "true" : "false") << '\n';
  const auto& a = c.train.augmentation;
  os << "augment.crop_fraction=" << detail::format_double(a.crop_fraction.lo) << ','
     << detail::format_double(a.crop_fraction.hi) << '\n';
  os << "augment.zoom=" << detail::format_double(a.zoom.lo) << ',' << detail::format_double(a.zoom.hi) << '\n';
  os << "augment.rotation_cap_degrees=" << detail::format_double(a.rotation_cap_degrees) << '\n';
  os << "augment.horizontal_flip_probability=" << detail::format_double(a.horizontal_flip_probability) << '\n';
  return os.str();
}

inline VariantConfig load_config_file(const std::filesystem::path& path, VariantConfig base = {}) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  apply_config_text(base, ss.str(), path.string());
  return base;
}

}  // namespace accdet
