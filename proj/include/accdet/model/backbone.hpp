// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "accdet/core/activation.hpp"
#include "accdet/core/conv.hpp"
#include "accdet/core/pool.hpp"
#include "accdet/core/random.hpp"
#include "accdet/model/config.hpp"

namespace accdet {

// conv3d ("same") + bias + ReLU.
template <class T>
struct ConvUnit {
  Parameter<T> kernel;
  Parameter<T> bias;
  Extent3 stride;

  struct Cache {
    Tensor<T> input;
    Tensor<T> output;
  };

  ConvUnit() = default;
  ConvUnit(Extent3 k, std::size_t in_ch, std::size_t filters, Extent3 s, Rng& rng)
      : kernel(he_uniform<T>({k.t, k.h, k.w, in_ch, filters}, k.t * k.h * k.w * in_ch, rng)),
        bias(Tensor<T>({filters})),
        stride(s) {}

  bool trainable() const { return kernel.trainable; }
  void set_trainable(bool on) { kernel.trainable = bias.trainable = on; }
  std::size_t filters() const { return kernel.value.dim(4); }

  Tensor<T> forward(const Tensor<T>& x, Cache* cache) const {
    auto y = conv3d(x, kernel.value, stride, Padding::same);
    add_channel_bias(y, bias.value);
    for (auto& v : y.values()) v = v > T{0} ? v : T{0};
    if (cache) *cache = Cache{x, y};
    return y;
  }

  Tensor<T> backward(const Cache& cache, const Tensor<T>& grad_out, bool need_input_grad) {
    Tensor<T> dz = activation_backward(cache.output, grad_out, Activation::relu);
    if (bias.trainable) accumulate_channel_bias_grad(dz, bias.grad);
    return conv3d_backward(cache.input, kernel.value, dz, stride, Padding::same,
                           kernel.trainable ? &kernel.grad : nullptr, need_input_grad);
  }
};

template <class T>
struct PoolStage {
  Extent3 window, stride;
  struct Cache {
    Shape input_dims;
    std::vector<std::size_t> argmax;
  };
  Tensor<T> forward(const Tensor<T>& x, Cache* cache) const {
    auto r = maxpool3d_with_indices(x, window, stride, Padding::same);
    if (cache) *cache = Cache{x.dims(), std::move(r.argmax)};
    return std::move(r.output);
  }
  Tensor<T> backward(const Cache& cache, const Tensor<T>& grad_out) const {
    return maxpool3d_backward(cache.input_dims, cache.argmax, grad_out);
  }
};

template <class T>
struct ConvStage {
  ConvUnit<T> conv;
};

// Parallel 1x1x1 and (1x1x1 reduce -> 3x3x3) branches, concatenated on channels.
template <class T>
struct InceptionStage {
  ConvUnit<T> branch1x1;
  ConvUnit<T> reduce;
  ConvUnit<T> branch3x3;

  struct Cache {
    typename ConvUnit<T>::Cache b1, red, b3;
  };

  Tensor<T> forward(const Tensor<T>& x, Cache* cache) const {
    auto a = branch1x1.forward(x, cache ? &cache->b1 : nullptr);
    auto r = reduce.forward(x, cache ? &cache->red : nullptr);
    auto b = branch3x3.forward(r, cache ? &cache->b3 : nullptr);
    return concat_last_axis(a, b);
  }

  Tensor<T> backward(const Cache& cache, const Tensor<T>& grad_out, bool need_input_grad) {
    auto [da, db] = split_last_axis(grad_out, branch1x1.filters());
    const bool need_reduce_grad = need_input_grad || reduce.trainable();
    auto dr = branch3x3.backward(cache.b3, db, need_reduce_grad);
    Tensor<T> dx;
    if (need_reduce_grad) dx = reduce.backward(cache.red, dr, need_input_grad);
    if (!need_input_grad) {
      branch1x1.backward(cache.b1, da, false);
      return {};
    }
    add_into(dx, branch1x1.backward(cache.b1, da, true));
    return dx;
  }
};

template <class T>
using Stage = std::variant<ConvStage<T>, PoolStage<T>, InceptionStage<T>>;

// Output of one backbone branch plus where it came from.
template <class T>
struct FeatureMap {
  Tensor<T> features;  // T' x H' x W' x C'
  std::string branch;
  std::string clip_id;
  std::size_t window_start = 0;
};

// Mini-I3D: a stack of conv / max-pool / inception stages. Convolution layers
// are counted in forward order (inception: 1x1x1, reduce, 3x3x3) and exactly
// the last `trainable_last_n` of them are trainable.
template <class T>
class Backbone {
 public:
  using StageCache = std::variant<typename ConvUnit<T>::Cache, typename PoolStage<T>::Cache,
                                  typename InceptionStage<T>::Cache>;
  using Cache = std::vector<StageCache>;

  Backbone() = default;

  Backbone(const BackboneConfig& config, Rng& rng) : config_(config) {
    config_.validate();
    std::size_t ch = config_.input_channels;
    for (const auto& s : config_.stages) {
      switch (s.kind) {
        case StageKind::conv:
          stages_.emplace_back(ConvStage<T>{ConvUnit<T>(s.kernel, ch, s.filters, s.stride, rng)});
          break;
        case StageKind::maxpool:
          stages_.emplace_back(PoolStage<T>{s.kernel, s.stride});
          break;
        case StageKind::inception: {
          InceptionStage<T> inc;
          inc.branch1x1 = ConvUnit<T>({1, 1, 1}, ch, s.branch1x1, s.stride, rng);
          inc.reduce = ConvUnit<T>({1, 1, 1}, ch, s.reduce, {1, 1, 1}, rng);
          inc.branch3x3 = ConvUnit<T>({3, 3, 3}, s.reduce, s.branch3x3, s.stride, rng);
          stages_.emplace_back(std::move(inc));
          break;
        }
      }
      ch = s.output_channels(ch);
    }
    set_trainable_last(config_.trainable_last_n);
  }

  const BackboneConfig& config() const { return config_; }
  std::size_t layer_count() const { return config_.conv_layer_count(); }

  // Conv layers in forward order.
  std::vector<ConvUnit<T>*> layers() {
    std::vector<ConvUnit<T>*> out;
    for (auto& s : stages_) {
      if (auto* c = std::get_if<ConvStage<T>>(&s)) {
        out.push_back(&c->conv);
      } else if (auto* i = std::get_if<InceptionStage<T>>(&s)) {
        out.insert(out.end(), {&i->branch1x1, &i->reduce, &i->branch3x3});
      }
    }
    return out;
  }

  void set_trainable_last(std::size_t n) {
    if (n > layer_count()) throw ConfigError("trainable_last_n exceeds layer count");
    config_.trainable_last_n = n;
    auto ls = layers();
    for (std::size_t i = 0; i < ls.size(); ++i) ls[i]->set_trainable(i + n >= ls.size());
  }

  std::vector<NamedParameter<T>> named_parameters(const std::string& prefix) {
    std::vector<NamedParameter<T>> out;
    auto ls = layers();
    for (std::size_t i = 0; i < ls.size(); ++i) {
      const std::string base = prefix + "layer" + std::to_string(i) + ".";
      out.push_back({base + "kernel", &ls[i]->kernel});
      out.push_back({base + "bias", &ls[i]->bias});
    }
    return out;
  }

  Shape output_dims(const Shape& input) const { return config_.output_dims(input); }

  Tensor<T> forward(const Tensor<T>& x, Cache* cache = nullptr) const {
    if (x.rank() != 4 || x.dim(3) != config_.input_channels) {
      throw ShapeError("backbone expects T x H x W x " + std::to_string(config_.input_channels) + ", got " +
                       shape_string(x.dims()));
    }
    if (cache) cache->clear();
    Tensor<T> h = x;
    for (const auto& s : stages_) {
      std::visit(
          [&](const auto& stage) {
            using S = std::decay_t<decltype(stage)>;
            if constexpr (std::is_same_v<S, ConvStage<T>>) {
              typename ConvUnit<T>::Cache c;
              h = stage.conv.forward(h, cache ? &c : nullptr);
              if (cache) cache->emplace_back(std::move(c));
            } else if constexpr (std::is_same_v<S, PoolStage<T>>) {
              typename PoolStage<T>::Cache c;
              h = stage.forward(h, cache ? &c : nullptr);
              if (cache) cache->emplace_back(std::move(c));
            } else {
              typename InceptionStage<T>::Cache c;
              h = stage.forward(h, cache ? &c : nullptr);
              if (cache) cache->emplace_back(std::move(c));
            }
          },
          s);
    }
    return h;
  }

  FeatureMap<T> extract_features(const Tensor<T>& window, std::string branch = {}, std::string clip_id = {},
                                 std::size_t start = 0) const {
    return {forward(window), std::move(branch), std::move(clip_id), start};
  }

  // Backpropagates into trainable layers only; stops once no earlier layer
  // can receive gradient. Returns dL/dinput when requested.
  Tensor<T> backward(const Cache& cache, const Tensor<T>& grad_out, bool need_input_grad = false) {
    if (cache.size() != stages_.size()) throw ShapeError("backbone cache does not match stages");
    std::vector<bool> trainable_before(stages_.size() + 1, false);
    for (std::size_t i = 0; i < stages_.size(); ++i) {
      trainable_before[i + 1] = trainable_before[i] || stage_trainable(stages_[i]);
    }
    Tensor<T> g = grad_out;
    for (std::size_t i = stages_.size(); i-- > 0;) {
      if (!trainable_before[i + 1] && !need_input_grad) break;
      const bool need_dx = trainable_before[i] || need_input_grad;
      auto& s = stages_[i];
      if (auto* c = std::get_if<ConvStage<T>>(&s)) {
        g = c->conv.backward(std::get<typename ConvUnit<T>::Cache>(cache[i]), g, need_dx);
      } else if (auto* p = std::get_if<PoolStage<T>>(&s)) {
        g = p->backward(std::get<typename PoolStage<T>::Cache>(cache[i]), g);
      } else {
        auto& inc = std::get<InceptionStage<T>>(s);
        g = inc.backward(std::get<typename InceptionStage<T>::Cache>(cache[i]), g, need_dx);
      }
    }
    return need_input_grad ? g : Tensor<T>{};
  }

 private:
  static bool stage_trainable(const Stage<T>& s) {
    if (auto* c = std::get_if<ConvStage<T>>(&s)) return c->conv.trainable();
    if (auto* i = std::get_if<InceptionStage<T>>(&s)) {
      return i->branch1x1.trainable() || i->reduce.trainable() || i->branch3x3.trainable();
    }
    return false;
  }

  BackboneConfig config_;
  std::vector<Stage<T>> stages_;
};

}  // namespace accdet
