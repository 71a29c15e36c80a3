// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "accdet/core/batchnorm.hpp"
#include "accdet/core/dense.hpp"
#include "accdet/core/gap.hpp"
#include "accdet/model/config.hpp"
#include "accdet/model/convlstm.hpp"

namespace accdet {

// Concatenation, RGB first. An empty flow vector passes RGB through.
template <class T>
Tensor<T> fuse(const Tensor<T>& rgb, const Tensor<T>& flow) {
  if (rgb.empty()) throw ShapeError("fuse: missing RGB vector");
  if (rgb.rank() != 1 || (!flow.empty() && flow.rank() != 1)) throw ShapeError("fuse expects vectors");
  if (flow.empty()) return rgb;
  return concat_last_axis(rgb, flow);
}

template <class T>
struct DenseLayer {
  Parameter<T> weights;  // n x m
  Parameter<T> bias;     // m

  DenseLayer() = default;
  DenseLayer(std::size_t n, std::size_t m, Rng& rng)
      : weights(he_uniform<T>({n, m}, n, rng)), bias(Tensor<T>({m})) {}
  std::size_t inputs() const { return weights.value.dim(0); }
  std::size_t outputs() const { return weights.value.dim(1); }
};

// ConvLSTM stack of one stream, optionally followed by batch normalization.
template <class T>
struct BranchHead {
  std::vector<ConvLstmLayer<T>> layers;
  std::optional<BatchNorm<T>> norm;

  std::size_t output_channels() const { return layers.back().filters(); }
};

template <class T>
using Logits = std::array<T, 2>;

// ConvLSTM2D stacks per stream (all but the last return full sequences, the
// last returns H_T), optional batch-norm, GAP2D, fusion, ReLU dense stack with
// dropout, and a final two-way dense layer producing the logits.
template <class T>
class Head {
 public:
  struct SampleCache {
    std::array<std::vector<typename ConvLstmLayer<T>::Cache>, 2> lstm;
    std::array<Shape, 2> map_dims;
    std::vector<Tensor<T>> dense_inputs;
    std::vector<Tensor<T>> dense_outputs;  // after ReLU, before dropout
    std::vector<Tensor<T>> dropout_masks;
    Tensor<T> out_input;
  };
  struct BatchCache {
    std::vector<SampleCache> samples;
    std::array<typename BatchNorm<T>::Cache, 2> norm;
  };

  Head() = default;

  Head(const HeadConfig& config, std::size_t rgb_channels, std::optional<std::size_t> flow_channels, Rng& rng)
      : config_(config) {
    config_.validate();
    if (rgb_channels == 0 || (flow_channels && *flow_channels == 0)) throw ShapeError("head: empty feature maps");
    branches_[0] = make_branch(rgb_channels, rng);
    if (flow_channels) branches_[1] = make_branch(*flow_channels, rng);
    std::size_t width = fused_width();
    for (auto w : config_.dense) {
      hidden_.emplace_back(width, w, rng);
      width = w;
    }
    out_ = DenseLayer<T>(width, config_.classes, rng);
  }

  const HeadConfig& config() const { return config_; }
  bool two_stream() const { return branches_[1].has_value(); }
  BranchHead<T>& branch(std::size_t b) { return *branches_.at(b); }
  std::vector<DenseLayer<T>>& hidden_layers() { return hidden_; }
  DenseLayer<T>& output_layer() { return out_; }

  std::size_t fused_width() const {
    return branches_[0]->output_channels() + (branches_[1] ? branches_[1]->output_channels() : 0);
  }

  std::vector<NamedParameter<T>> named_parameters(const std::string& prefix) {
    std::vector<NamedParameter<T>> out;
    for (std::size_t b = 0; b < 2; ++b) {
      if (!branches_[b]) continue;
      const std::string bp = prefix + (b == 0 ? "rgb." : "flow.");
      for (std::size_t l = 0; l < branches_[b]->layers.size(); ++l) {
        auto ps = branches_[b]->layers[l].weights().named_parameters(bp + "convlstm" + std::to_string(l) + ".");
        out.insert(out.end(), ps.begin(), ps.end());
      }
      if (auto& n = branches_[b]->norm) {
        out.push_back({bp + "bn.scale", &n->scale});
        out.push_back({bp + "bn.shift", &n->shift});
      }
    }
    for (std::size_t d = 0; d < hidden_.size(); ++d) {
      out.push_back({prefix + "dense" + std::to_string(d) + ".weights", &hidden_[d].weights});
      out.push_back({prefix + "dense" + std::to_string(d) + ".bias", &hidden_[d].bias});
    }
    out.push_back({prefix + "logits.weights", &out_.weights});
    out.push_back({prefix + "logits.bias", &out_.bias});
    return out;
  }

  std::vector<NamedBuffer<T>> named_buffers(const std::string& prefix) {
    std::vector<NamedBuffer<T>> out;
    for (std::size_t b = 0; b < 2; ++b) {
      if (!branches_[b] || !branches_[b]->norm) continue;
      const std::string bp = prefix + (b == 0 ? "rgb." : "flow.");
      out.push_back({bp + "bn.running_mean", &branches_[b]->norm->running_mean});
      out.push_back({bp + "bn.running_var", &branches_[b]->norm->running_var});
    }
    return out;
  }

  // features[b][s]: backbone output of stream b for sample s. The flow span
  // must be empty for single-stream heads and full-length otherwise.
  std::vector<Logits<T>> forward(std::span<const Tensor<T>> rgb, std::span<const Tensor<T>> flow, Mode mode,
                                 Rng* dropout_rng = nullptr, BatchCache* cache = nullptr) {
    const std::size_t N = rgb.size();
    if (N == 0) throw ShapeError("head: empty batch");
    if (two_stream() && flow.size() != N) throw ShapeError("head: two-stream model requires flow features");
    if (!two_stream() && !flow.empty()) throw ShapeError("head: single-stream model given flow features");
    std::array<std::span<const Tensor<T>>, 2> inputs{rgb, flow};
    std::vector<SampleCache> local(N);
    auto& sc = cache ? cache->samples : local;
    sc.assign(N, SampleCache{});
    std::array<std::vector<Tensor<T>>, 2> maps;
    for (std::size_t b = 0; b < 2; ++b) {
      if (!branches_[b]) continue;
      auto& br = *branches_[b];
      for (std::size_t s = 0; s < N; ++s) {
        Tensor<T> x = inputs[b][s];
        sc[s].lstm[b].resize(br.layers.size());
        for (std::size_t l = 0; l < br.layers.size(); ++l) {
          x = br.layers[l].forward(x, cache ? &sc[s].lstm[b][l] : nullptr);
        }
        sc[s].map_dims[b] = x.dims();
        maps[b].push_back(std::move(x));
      }
      if (br.norm) {
        for (std::size_t s = 1; s < N; ++s) {
          if (maps[b][s].dims() != maps[b][0].dims()) throw ShapeError("head: batch-norm batch with mixed extents");
        }
        auto stacked = stack(std::span<const Tensor<T>>(maps[b]));
        auto y = br.norm->forward(stacked, mode, cache ? &cache->norm[b] : nullptr);
        for (std::size_t s = 0; s < N; ++s) maps[b][s] = slice_leading(y, s, 1).reshaped(maps[b][s].dims());
      }
    }
    std::vector<Logits<T>> logits(N);
    const bool drop = mode == Mode::train && config_.dropout > 0.0 && dropout_rng;
    for (std::size_t s = 0; s < N; ++s) {
      Tensor<T> h = fuse(gap2d(maps[0][s]), branches_[1] ? gap2d(maps[1][s]) : Tensor<T>{});
      for (auto& layer : hidden_) {
        if (cache) sc[s].dense_inputs.push_back(h);
        h = dense(h, layer.weights, layer.bias);
        for (auto& v : h.values()) v = v > T{0} ? v : T{0};
        if (cache) sc[s].dense_outputs.push_back(h);
        if (drop) {
          Tensor<T> mask(h.dims());
          std::bernoulli_distribution keep(1.0 - config_.dropout);
          const T scale = static_cast<T>(1.0 / (1.0 - config_.dropout));
          for (std::size_t i = 0; i < h.size(); ++i) {
            mask[i] = keep(*dropout_rng) ? scale : T{0};
            h[i] *= mask[i];
          }
          if (cache) sc[s].dropout_masks.push_back(std::move(mask));
        }
      }
      if (cache) sc[s].out_input = h;
      auto z = dense(h, out_.weights, out_.bias);
      logits[s] = {z[0], z[1]};
    }
    return logits;
  }

  // Returns dL/d(features) per stream and sample (empty tensors when not requested).
  std::array<std::vector<Tensor<T>>, 2> backward(BatchCache& cache, std::span<const Logits<T>> grad_logits,
                                                 bool need_input_grad) {
    const std::size_t N = cache.samples.size();
    if (grad_logits.size() != N) throw ShapeError("head backward: batch size mismatch");
    std::array<std::vector<Tensor<T>>, 2> dmaps;
    for (std::size_t s = 0; s < N; ++s) {
      auto& sc = cache.samples[s];
      Tensor<T> dz({2}, std::vector<T>{grad_logits[s][0], grad_logits[s][1]});
      Tensor<T> dh = dense_backward(sc.out_input, out_.weights, out_.bias, dz);
      for (std::size_t d = hidden_.size(); d-- > 0;) {
        if (!sc.dropout_masks.empty()) {
          for (std::size_t i = 0; i < dh.size(); ++i) dh[i] *= sc.dropout_masks[d][i];
        }
        dh = activation_backward(sc.dense_outputs[d], dh, Activation::relu);
        dh = dense_backward(sc.dense_inputs[d], hidden_[d].weights, hidden_[d].bias, dh);
      }
      if (branches_[1]) {
        auto [dr, df] = split_last_axis(dh, branches_[0]->output_channels());
        dmaps[0].push_back(gap2d_backward(sc.map_dims[0], dr));
        dmaps[1].push_back(gap2d_backward(sc.map_dims[1], df));
      } else {
        dmaps[0].push_back(gap2d_backward(sc.map_dims[0], dh));
      }
    }
    std::array<std::vector<Tensor<T>>, 2> dfeat;
    for (std::size_t b = 0; b < 2; ++b) {
      if (!branches_[b]) continue;
      auto& br = *branches_[b];
      if (br.norm) {
        auto stacked = stack(std::span<const Tensor<T>>(dmaps[b]));
        auto dx = br.norm->backward(cache.norm[b], stacked);
        for (std::size_t s = 0; s < N; ++s) dmaps[b][s] = slice_leading(dx, s, 1).reshaped(dmaps[b][s].dims());
      }
      for (std::size_t s = 0; s < N; ++s) {
        Tensor<T> g = std::move(dmaps[b][s]);
        for (std::size_t l = br.layers.size(); l-- > 0;) {
          g = br.layers[l].backward(cache.samples[s].lstm[b][l], g, l > 0 || need_input_grad);
        }
        dfeat[b].push_back(std::move(g));
      }
    }
    return dfeat;
  }

 private:
  BranchHead<T> make_branch(std::size_t in_channels, Rng& rng) {
    BranchHead<T> br;
    std::size_t ch = in_channels;
    for (std::size_t l = 0; l < config_.convlstm_filters.size(); ++l) {
      const std::size_t f = config_.convlstm_filters[l];
      const bool last = l + 1 == config_.convlstm_filters.size();
      br.layers.emplace_back(ConvLstmWeights<T>::random(config_.kernel, ch, f, rng), !last);
      ch = f;
    }
    if (config_.batchnorm_before_gap) br.norm.emplace(ch);
    return br;
  }

  HeadConfig config_;
  std::array<std::optional<BranchHead<T>>, 2> branches_;
  std::vector<DenseLayer<T>> hidden_;
  DenseLayer<T> out_;
};

}  // namespace accdet
