// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "accdet/core/softmax.hpp"
#include "accdet/core/tensor_io.hpp"
#include "accdet/model/backbone.hpp"
#include "accdet/model/head.hpp"

namespace accdet {

struct ParameterCount {
  std::size_t total = 0;
  std::size_t trainable = 0;
};

template <class T>
ParameterCount count_parameters(std::span<const NamedParameter<T>> params) {
  ParameterCount c;
  for (const auto& p : params) {
    c.total += p.param->size();
    if (p.param->trainable) c.trainable += p.param->size();
  }
  return c;
}

template <class T>
ParameterCount count_parameters(const std::vector<NamedParameter<T>>& params) {
  return count_parameters(std::span<const NamedParameter<T>>(params));
}

// One preprocessed window. `flow` stays empty for single-stream models.
template <class T>
struct ModelInput {
  Tensor<T> rgb;   // T x H x W x 3
  Tensor<T> flow;  // T x H x W x 2
};

struct Prediction {
  Probabilities probs;
  std::array<double, 2> logits{};
};

inline constexpr std::size_t kFlowChannels = 2;

template <class T = float>
class Model {
 public:
  struct BatchCache {
    std::array<std::vector<typename Backbone<T>::Cache>, 2> backbone;
    typename Head<T>::BatchCache head;
  };

  Model() = default;

  explicit Model(const ModelConfig& config) : config_(config) {
    config_.backbone.input_channels = 3;
    config_.backbone.validate();
    Rng rgb_rng(derive_seed(config_.seed, 1));
    backbones_[0] = Backbone<T>(config_.backbone, rgb_rng);
    std::optional<std::size_t> flow_channels;
    if (config_.two_stream) {
      BackboneConfig fc = config_.backbone;
      fc.input_channels = kFlowChannels;
      Rng flow_rng(derive_seed(config_.seed, 2));
      backbones_[1] = Backbone<T>(fc, flow_rng);
      flow_channels = feature_channels();
    }
    Rng head_rng(derive_seed(config_.seed, 3));
    head_ = Head<T>(config_.head, feature_channels(), flow_channels, head_rng);
  }

  const ModelConfig& config() const { return config_; }
  bool two_stream() const { return config_.two_stream; }
  Backbone<T>& backbone(std::size_t b) { return *backbones_.at(b); }
  const Backbone<T>& backbone(std::size_t b) const { return *backbones_.at(b); }
  Head<T>& head() { return head_; }

  std::size_t feature_channels() const {
    return config_.backbone.output_dims({1, 1, 1, config_.backbone.input_channels})[3];
  }

  // Rejects inputs the model cannot consume before any work is done.
  void validate_input(const ModelInput<T>& in) const {
    if (in.rgb.rank() != 4 || in.rgb.dim(3) != 3) {
      throw ShapeError("RGB window must be T x H x W x 3, got " + shape_string(in.rgb.dims()));
    }
    if (two_stream()) {
      if (in.flow.empty()) throw ShapeError("two-stream model requires a flow window");
      if (in.flow.rank() != 4 || in.flow.dim(3) != kFlowChannels) {
        throw ShapeError("flow window must be T x H x W x 2, got " + shape_string(in.flow.dims()));
      }
    } else if (!in.flow.empty()) {
      throw ShapeError("single-stream model given a flow window");
    }
    config_.backbone.validate_input(in.rgb.dims());
  }

  bool backbone_trainable(std::size_t b) const { return backbones_[b] && backbones_[b]->config().trainable_last_n > 0; }

  // Backbone features for both streams (flow slot empty for single-stream).
  std::array<Tensor<T>, 2> features(const ModelInput<T>& in) const {
    validate_input(in);
    std::array<Tensor<T>, 2> f;
    f[0] = backbones_[0]->forward(in.rgb);
    if (two_stream()) f[1] = backbones_[1]->forward(in.flow);
    return f;
  }

  // Head forward over precomputed backbone features.
  std::vector<Logits<T>> head_forward(std::span<const std::array<Tensor<T>, 2>> feats, Mode mode, Rng* dropout_rng,
                                      typename Head<T>::BatchCache* cache) {
    std::vector<Tensor<T>> rgb, flow;
    for (const auto& f : feats) {
      rgb.push_back(f[0]);
      if (two_stream()) flow.push_back(f[1]);
    }
    return head_.forward(rgb, flow, mode, dropout_rng, cache);
  }

  std::vector<Logits<T>> forward_batch(std::span<const ModelInput<T>> batch, Mode mode, Rng* dropout_rng = nullptr,
                                       BatchCache* cache = nullptr) {
    std::vector<std::array<Tensor<T>, 2>> feats(batch.size());
    if (cache) {
      for (auto& v : cache->backbone) v.assign(batch.size(), {});
    }
    for (std::size_t s = 0; s < batch.size(); ++s) {
      validate_input(batch[s]);
      for (std::size_t b = 0; b < (two_stream() ? 2u : 1u); ++b) {
        const auto& x = b == 0 ? batch[s].rgb : batch[s].flow;
        const bool keep = cache && backbone_trainable(b);
        feats[s][b] = backbones_[b]->forward(x, keep ? &cache->backbone[b][s] : nullptr);
      }
    }
    return head_forward(feats, mode, dropout_rng, cache ? &cache->head : nullptr);
  }

  // Accumulates gradients of every trainable parameter.
  void backward(BatchCache& cache, std::span<const Logits<T>> grad_logits) {
    const bool any_backbone = backbone_trainable(0) || backbone_trainable(1);
    auto dfeat = head_.backward(cache.head, grad_logits, any_backbone);
    for (std::size_t b = 0; b < 2; ++b) {
      if (!backbone_trainable(b)) continue;
      for (std::size_t s = 0; s < dfeat[b].size(); ++s) backbones_[b]->backward(cache.backbone[b][s], dfeat[b][s]);
    }
  }

  Prediction predict(const ModelInput<T>& in) {
    const auto z = forward_batch(std::span<const ModelInput<T>>(&in, 1), Mode::infer)[0];
    Prediction p;
    p.logits = {static_cast<double>(z[0]), static_cast<double>(z[1])};
    p.probs = softmax2(p.logits[0], p.logits[1]);
    return p;
  }

  Prediction predict(const Tensor<T>& rgb, const Tensor<T>* flow = nullptr) {
    return predict(ModelInput<T>{rgb, flow ? *flow : Tensor<T>{}});
  }

  std::vector<NamedParameter<T>> named_parameters() {
    std::vector<NamedParameter<T>> out = backbones_[0]->named_parameters("rgb_backbone.");
    if (backbones_[1]) {
      auto f = backbones_[1]->named_parameters("flow_backbone.");
      out.insert(out.end(), f.begin(), f.end());
    }
    auto h = head_.named_parameters("head.");
    out.insert(out.end(), h.begin(), h.end());
    return out;
  }

  std::vector<NamedBuffer<T>> named_buffers() { return head_.named_buffers("head."); }

  ParameterCount count_parameters() { return accdet::count_parameters(named_parameters()); }

  void zero_grad() {
    for (auto& p : named_parameters()) p.param->zero_grad();
  }

 private:
  ModelConfig config_;
  std::array<std::optional<Backbone<T>>, 2> backbones_;
  Head<T> head_;
};

// Builtin variants, one per experimental configuration.
inline std::vector<StageConfig> default_backbone_stages() {
  return {parse_stage("conv kernel=7x7x7 filters=64 stride=2x2x2"),
          parse_stage("maxpool window=1x3x3 stride=1x2x2"),
          parse_stage("inception b1x1=32 reduce=48 b3x3=64 stride=2x2x2"),
          parse_stage("inception b1x1=32 reduce=64 b3x3=96 stride=2x2x2"),
          parse_stage("conv kernel=3x3x3 filters=192 stride=1x2x2")};
}

inline const std::vector<std::string>& variant_names() {
  static const std::vector<std::string> names{"rgb_only", "nontrainable_twostream", "augmented_twostream",
                                              "trainable_twostream"};
  return names;
}

inline VariantConfig builtin_variant(const std::string& name) {
  VariantConfig v;
  v.name = name;
  v.model.backbone.stages = default_backbone_stages();
  v.model.head.dense = {256, 128, 128};
  if (name == "rgb_only") {
    v.model.two_stream = false;
  } else if (name == "nontrainable_twostream") {
  } else if (name == "augmented_twostream") {
    v.train.augment = true;
  } else if (name == "trainable_twostream") {
    v.model.backbone.trainable_last_n = 4;
    v.model.head.convlstm_filters = {96, 32, 32};
    v.model.head.batchnorm_before_gap = true;
    v.model.head.dense = {512, 256, 256};
    v.train.augment = true;
  } else {
    throw ConfigError("unknown variant '" + name + "'");
  }
  return v;
}

inline constexpr const char* kModelConfigFile = "config.cfg";

template <class T>
void save_model(const std::filesystem::path& dir, const VariantConfig& cfg, Model<T>& model) {
  std::filesystem::create_directories(dir);
  std::map<std::string, const Tensor<T>*> tensors;
  for (const auto& p : model.named_parameters()) tensors.emplace(p.name, &p.param->value);
  for (const auto& b : model.named_buffers()) tensors.emplace(b.name, b.tensor);
  save_tensor_set(dir, tensors);
  std::ofstream f(dir / kModelConfigFile, std::ios::trunc);
  if (!f) throw DataError("cannot write " + (dir / kModelConfigFile).string());
  f << format_config(cfg);
}

// Copies saved tensors into a model built from the same configuration.
template <class T>
void load_weights(const std::filesystem::path& dir, Model<T>& model) {
  auto tensors = load_tensor_set<T>(dir);
  auto take = [&](const std::string& name, Tensor<T>& dst) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw DataError("weights missing '" + name + "' in " + dir.string());
    if (it->second.dims() != dst.dims()) {
      throw DataError("weights '" + name + "' have shape " + shape_string(it->second.dims()) + ", model expects " +
                      shape_string(dst.dims()));
    }
    dst = std::move(it->second);
  };
  for (auto& p : model.named_parameters()) take(p.name, p.param->value);
  for (auto& b : model.named_buffers()) take(b.name, *b.tensor);
}

template <class T = float>
struct LoadedModel {
  VariantConfig config;
  Model<T> model;
};

template <class T = float>
LoadedModel<T> load_model(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / kModelConfigFile)) throw DataError("no model config in " + dir.string());
  LoadedModel<T> out{load_config_file(dir / kModelConfigFile), {}};
  out.model = Model<T>(out.config.model);
  load_weights(dir, out.model);
  return out;
}

}  // namespace accdet
