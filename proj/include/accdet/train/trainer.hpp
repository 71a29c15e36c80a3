// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "accdet/model/model.hpp"
#include "accdet/train/dataset.hpp"
#include "accdet/train/metrics.hpp"
#include "accdet/train/optimizer.hpp"
#include "accdet/video/augment.hpp"

namespace accdet {

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0, train_accuracy = 0;
  std::optional<double> val_loss, val_accuracy;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
};

inline std::string format_history(const TrainHistory& h) {
  using detail::format_double;
  std::ostringstream os;
  os << "epoch,train_loss,train_accuracy,val_loss,val_accuracy\n";
  for (const auto& e : h.epochs) {
    os << e.epoch << ',' << format_double(e.train_loss) << ',' << format_double(e.train_accuracy) << ','
       << (e.val_loss ? format_double(*e.val_loss) : "") << ','
       << (e.val_accuracy ? format_double(*e.val_accuracy) : "") << '\n';
  }
  return os.str();
}

struct Evaluation {
  std::vector<Probabilities> probs;
  std::vector<Label> labels;
  double loss = 0;  // mean cross-entropy

  double accuracy() const {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      hits += (is_accident(probs[i].accident) == (labels[i] == Label::accident)) ? 1 : 0;
    }
    return probs.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(probs.size());
  }
};

template <class T>
ModelInput<T> model_input(const Example& e, bool two_stream) {
  ModelInput<T> in;
  in.rgb = e.rgb.cast<T>();
  if (two_stream) in.flow = e.flow.cast<T>();
  return in;
}

// Inference-mode predictions over a set of examples, in input order.
template <class T>
Evaluation evaluate_examples(Model<T>& model, std::span<const Example> examples) {
  if (examples.empty()) throw DataError("cannot evaluate an empty split");
  Evaluation ev;
  double loss = 0;
  for (const auto& e : examples) {
    const auto p = model.predict(model_input<T>(e, model.two_stream()));
    ev.probs.push_back(p.probs);
    ev.labels.push_back(e.label);
    loss += cross_entropy(p.probs, e.label);
  }
  ev.loss = loss / static_cast<double>(examples.size());
  return ev;
}

template <class T>
MetricsReport evaluate(Model<T>& model, std::span<const Example> examples, const std::string& variant) {
  const auto ev = evaluate_examples(model, examples);
  return compute_metrics(ev.probs, ev.labels, variant);
}

struct TrainOptions {
  HornSchunckOptions flow;                 // used to recompute flow of augmented windows
  std::filesystem::path dump_dir;          // state dump on divergence; empty disables
  std::function<void(const EpochRecord&)> on_epoch;
};

// Mini-batch training with seeded per-epoch shuffling. The loss is the mean
// (optionally class-weighted) cross-entropy of the batch.
template <class T>
class Trainer {
 public:
  Trainer(Model<T>& model, TrainConfig config, TrainOptions options = {})
      : model_(model), config_(std::move(config)), options_(std::move(options)) {
    config_.validate();
    optimizer_ = make_optimizer<T>(config_.optimizer, config_.learning_rate);
  }

  TrainHistory fit(std::span<const Example> train, std::span<const Example> val = {}) {
    if (train.empty()) throw DataError("training split is empty");
    const bool two = model_.two_stream();
    const bool cache_features = !config_.augment && !model_.backbone_trainable(0) && !model_.backbone_trainable(1);
    std::vector<std::array<Tensor<T>, 2>> features;
    if (cache_features) {
      features.reserve(train.size());
      for (const auto& e : train) features.push_back(model_.features(model_input<T>(e, two)));
    }
    const auto weights = class_weights(train);
    std::vector<Tensor<T>> saved_buffers;
    if (config_.learning_rate == 0.0) {
      for (const auto& b : model_.named_buffers()) saved_buffers.push_back(*b.tensor);
    }
    auto params = model_.named_parameters();
    TrainHistory history;
    std::vector<std::size_t> order(train.size());
    for (std::size_t epoch = 1; epoch <= config_.epochs; ++epoch) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng shuffle_rng(derive_seed(config_.seed, 3 * epoch));
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      Rng dropout_rng(derive_seed(config_.seed, 3 * epoch + 1));
      Rng augment_rng(derive_seed(config_.seed, 3 * epoch + 2));
      double loss_sum = 0;
      std::size_t hits = 0;
      for (std::size_t begin = 0; begin < order.size(); begin += config_.batch_size) {
        const std::size_t end = std::min(order.size(), begin + config_.batch_size);
        std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                     order.begin() + static_cast<std::ptrdiff_t>(end));
        typename Model<T>::BatchCache cache;
        std::vector<Logits<T>> logits;
        if (cache_features) {
          std::vector<std::array<Tensor<T>, 2>> f;
          for (auto i : idx) f.push_back(features[i]);
          logits = model_.head_forward(f, Mode::train, &dropout_rng, &cache.head);
        } else {
          std::vector<ModelInput<T>> batch;
          for (auto i : idx) batch.push_back(prepare(train[i], augment_rng));
          logits = model_.forward_batch(batch, Mode::train, &dropout_rng, &cache);
        }
        std::vector<Logits<T>> grads(idx.size());
        const double scale = 1.0 / static_cast<double>(idx.size());
        for (std::size_t s = 0; s < idx.size(); ++s) {
          const auto& ex = train[idx[s]];
          if (!std::isfinite(logits[s][0]) || !std::isfinite(logits[s][1])) {
            diverged(history, epoch, "non-finite logits");
          }
          const auto p = softmax2(static_cast<double>(logits[s][0]), static_cast<double>(logits[s][1]));
          const double w = weights[static_cast<std::size_t>(ex.label)];
          const double loss = cross_entropy(p, ex.label);
          if (!std::isfinite(loss)) diverged(history, epoch, "non-finite loss");
          loss_sum += loss;
          hits += (is_accident(p.accident) == (ex.label == Label::accident)) ? 1 : 0;
          const auto g = cross_entropy_logit_grad(p, ex.label, w * scale);
          grads[s] = {static_cast<T>(g[0]), static_cast<T>(g[1])};
        }
        model_.zero_grad();
        model_.backward(cache, grads);
        for (const auto& p : params) {
          if (p.param->trainable && !p.param->grad.all_finite()) diverged(history, epoch, "non-finite gradient");
        }
        optimizer_->step(params);
      }
      EpochRecord rec;
      rec.epoch = epoch;
      rec.train_loss = loss_sum / static_cast<double>(train.size());
      rec.train_accuracy = static_cast<double>(hits) / static_cast<double>(train.size());
      if (!val.empty()) {
        const auto ev = evaluate_examples(model_, val);
        rec.val_loss = ev.loss;
        rec.val_accuracy = ev.accuracy();
      }
      history.epochs.push_back(rec);
      if (options_.on_epoch) options_.on_epoch(rec);
    }
    if (!saved_buffers.empty()) {
      auto buffers = model_.named_buffers();
      for (std::size_t i = 0; i < buffers.size(); ++i) *buffers[i].tensor = saved_buffers[i];
    }
    return history;
  }

  // Inverse-frequency weights N / (2 N_c), or all ones when disabled.
  std::array<double, 2> class_weights(std::span<const Example> train) const {
    if (!config_.class_weights) return {1.0, 1.0};
    std::array<double, 2> n{0.0, 0.0};
    for (const auto& e : train) n[static_cast<std::size_t>(e.label)] += 1.0;
    const double total = n[0] + n[1];
    return {n[0] > 0 ? total / (2.0 * n[0]) : 1.0, n[1] > 0 ? total / (2.0 * n[1]) : 1.0};
  }

 private:
  ModelInput<T> prepare(const Example& e, Rng& rng) const {
    if (!config_.augment) return model_input<T>(e, model_.two_stream());
    FrameSequence clip;
    clip.fps = 1.0;
    for (std::size_t t = 0; t < e.rgb.dim(0); ++t) {
      clip.frames.push_back(slice_leading(e.rgb, t, 1).reshaped({e.rgb.dim(1), e.rgb.dim(2), e.rgb.dim(3)}));
    }
    const auto aug = apply_transform(clip, sample_transform(config_.augmentation, rng));
    ModelInput<T> in;
    in.rgb = aug.to_tensor().cast<T>();
    if (model_.two_stream()) in.flow = flow_sequence(aug, options_.flow).cast<T>();
    return in;
  }

  [[noreturn]] void diverged(const TrainHistory& history, std::size_t epoch, const std::string& what) {
    if (!options_.dump_dir.empty()) {
      std::filesystem::create_directories(options_.dump_dir);
      std::map<std::string, const Tensor<T>*> tensors;
      auto params = model_.named_parameters();
      for (const auto& p : params) tensors.emplace(p.name, &p.param->value);
      save_tensor_set(options_.dump_dir, tensors);
      std::ofstream(options_.dump_dir / "history.csv") << format_history(history);
    }
    throw NumericError("training diverged in epoch " + std::to_string(epoch) + ": " + what +
                       (options_.dump_dir.empty() ? "" : "; state dumped to " + options_.dump_dir.string()));
  }

  Model<T>& model_;
  TrainConfig config_;
  TrainOptions options_;
  std::unique_ptr<Optimizer<T>> optimizer_;
};

}  // namespace accdet
