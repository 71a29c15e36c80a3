// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "accdet/cli/commands.hpp"
#include "accdet/core/grad_check.hpp"
#include "support/reference.hpp"
#include "support/scenes.hpp"

namespace {

using namespace accdet;
namespace fs = std::filesystem;
using Gen = std::mt19937_64;
using Clock = std::chrono::steady_clock;

const fs::path kSource = ACCDET_SOURCE_DIR;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::size_t pick(Gen& g, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(g);
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---- 1. kernel oracles ----

Outcome kernel_oracles() {
  Outcome o;
  const auto t0 = Clock::now();
  constexpr int kTrials = 1000;
  constexpr double kTol = 1e-5;
  Gen g(101);
  double worst = 0;
  auto check = [&](double err, const char* name, int trial) {
    worst = std::max(worst, err);
    if (!(err <= kTol)) {
      o.require(false, std::string(name) + " trial " + std::to_string(trial) + " err " + fmt("%.3g", err));
    }
  };
  for (int trial = 0; trial < kTrials; ++trial) {
    const std::size_t H = pick(g, 1, 9), W = pick(g, 1, 9), C = pick(g, 1, 4), F = pick(g, 1, 4);
    const std::size_t kh = pick(g, 1, 4), kw = pick(g, 1, 4), s = pick(g, 1, 3);
    const bool same = pick(g, 0, 1) == 1 || kh > H || kw > W;
    auto x = ref::random_tensor<float>({H, W, C}, g);
    auto k = ref::random_tensor<float>({kh, kw, C, F}, g);
    check(ref::max_abs_diff(conv2d(x, k, s, same ? Padding::same : Padding::valid), ref::conv2d(x, k, s, same)),
          "conv2d", trial);
  }
  for (int trial = 0; trial < kTrials; ++trial) {
    const std::size_t T = pick(g, 1, 6), H = pick(g, 1, 7), W = pick(g, 1, 7), C = pick(g, 1, 3), F = pick(g, 1, 3);
    const std::size_t kt = pick(g, 1, 3), kh = pick(g, 1, 3), kw = pick(g, 1, 3);
    const std::size_t st = pick(g, 1, 2), sh = pick(g, 1, 3), sw = pick(g, 1, 3);
    const bool same = pick(g, 0, 1) == 1 || kt > T || kh > H || kw > W;
    auto x = ref::random_tensor<float>({T, H, W, C}, g);
    auto k = ref::random_tensor<float>({kt, kh, kw, C, F}, g);
    check(ref::max_abs_diff(conv3d(x, k, {st, sh, sw}, same ? Padding::same : Padding::valid),
                            ref::conv3d(x, k, st, sh, sw, same)),
          "conv3d", trial);
  }
  for (int trial = 0; trial < kTrials; ++trial) {
    const std::size_t T = pick(g, 1, 5), H = pick(g, 1, 8), W = pick(g, 1, 8), C = pick(g, 1, 3);
    const Extent3 win{pick(g, 1, std::min<std::size_t>(3, T)), pick(g, 1, std::min<std::size_t>(3, H)),
                      pick(g, 1, std::min<std::size_t>(3, W))};
    const Extent3 st{pick(g, 1, 2), pick(g, 1, 3), pick(g, 1, 3)};
    const bool same = pick(g, 0, 1) == 1;
    auto x = ref::random_tensor<float>({T, H, W, C}, g);
    check(ref::max_abs_diff(maxpool3d(x, win, st, same ? Padding::same : Padding::valid),
                            ref::maxpool3d(x, win.t, win.h, win.w, st.t, st.h, st.w, same)),
          "maxpool3d", trial);
  }
  for (int trial = 0; trial < kTrials; ++trial) {
    const std::size_t n = pick(g, 1, 40), m = pick(g, 1, 20);
    auto x = ref::random_tensor<float>({n}, g);
    auto w = ref::random_tensor<float>({n, m}, g);
    auto b = ref::random_tensor<float>({m}, g);
    check(ref::max_abs_diff(dense(x, w, b), ref::dense(x, w, b)), "dense", trial);
  }
  for (int trial = 0; trial < kTrials; ++trial) {
    auto x = ref::random_tensor<float>({pick(g, 1, 12), pick(g, 1, 12), pick(g, 1, 6)}, g);
    check(ref::max_abs_diff(gap2d(x), ref::gap2d(x)), "gap2d", trial);
  }
  const double secs = seconds_since(t0);
  o.require(secs < 60.0, "runtime " + fmt("%.1f", secs) + " s exceeds 60 s");
  o.detail = "5 kernels x " + std::to_string(kTrials) + " instances, max err " + fmt("%.3g", worst) + ", " +
             fmt("%.1f", secs) + " s" + (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

// ---- 2. gradient suite ----

struct Projection {
  Tensor<double> coeff;
  double operator()(const Tensor<double>& y) const {
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += coeff[i] * y[i];
    return s;
  }
};

Projection projection(const Shape& dims, Gen& g) { return {ref::random_tensor<double>(dims, g)}; }

ConvLstmWeights<double> lstm_weights(std::size_t k, std::size_t cin, std::size_t f, Gen& g) {
  ConvLstmWeights<double> w(k, cin, f);
  for (std::size_t q = 0; q < 4; ++q) {
    fill_uniform(w.W[q].value, g, -0.5, 0.5);
    fill_uniform(w.U[q].value, g, -0.5, 0.5);
    fill_uniform(w.b[q].value, g, -0.5, 0.5);
  }
  return w;
}

Outcome gradient_suite() {
  Outcome o;
  const auto t0 = Clock::now();
  GradCheckOptions opt;
  opt.epsilon = 1e-5;
  opt.tolerance = 1e-4;
  std::string summary;
  auto record = [&](const std::string& name, const GradCheckReport& r) {
    summary += (summary.empty() ? "" : ", ") + name + " " + fmt("%.2g", r.max_relative_error);
    o.require(r.passed, name + " failed at " + r.worst);
  };
  Gen g(202);
  {
    Parameter<double> x(ref::random_tensor<double>({9}, g)), w(ref::random_tensor<double>({9, 6}, g)),
        b(ref::random_tensor<double>({6}, g));
    auto proj = projection({6}, g);
    std::vector<NamedParameter<double>> ps{{"x", &x}, {"w", &w}, {"b", &b}};
    record("dense", grad_check(ps, [&] { return proj(dense(x.value, w, b)); },
                               [&] { add_into(x.grad, dense_backward(x.value, w, b, proj.coeff)); }, opt));
  }
  {
    Parameter<double> x(ref::random_tensor<double>({7, 6, 2}, g)), k(ref::random_tensor<double>({3, 3, 2, 3}, g));
    auto proj = projection(conv2d(x.value, k.value, 2, Padding::same).dims(), g);
    std::vector<NamedParameter<double>> ps{{"x", &x}, {"k", &k}};
    record("conv2d", grad_check(ps, [&] { return proj(conv2d(x.value, k, 2, Padding::same)); },
                                [&] { add_into(x.grad, conv2d_backward(x.value, k, proj.coeff, 2, Padding::same)); },
                                opt));
  }
  {
    const Extent3 stride{2, 1, 2};
    Parameter<double> x(ref::random_tensor<double>({4, 5, 5, 2}, g)),
        k(ref::random_tensor<double>({3, 3, 3, 2, 3}, g));
    auto proj = projection(conv3d(x.value, k.value, stride, Padding::same).dims(), g);
    std::vector<NamedParameter<double>> ps{{"x", &x}, {"k", &k}};
    record("conv3d",
           grad_check(ps, [&] { return proj(conv3d(x.value, k, stride, Padding::same)); },
                      [&] { add_into(x.grad, conv3d_backward(x.value, k, proj.coeff, stride, Padding::same)); }, opt));
  }
  {
    BatchNorm<double> bn(3);
    fill_uniform(bn.scale.value, g, 0.5, 1.5);
    fill_uniform(bn.shift.value, g, -0.5, 0.5);
    Parameter<double> x(ref::random_tensor<double>({4, 3, 3}, g));
    auto proj = projection(x.value.dims(), g);
    std::vector<NamedParameter<double>> ps{{"x", &x}, {"scale", &bn.scale}, {"shift", &bn.shift}};
    typename BatchNorm<double>::Cache cache;
    record("batchnorm", grad_check(
                            ps, [&] { return proj(BatchNorm<double>(bn).forward(x.value, Mode::train)); },
                            [&] {
                              bn.forward(x.value, Mode::train, &cache);
                              add_into(x.grad, bn.backward(cache, proj.coeff));
                            },
                            opt));
  }
  {
    ConvLstmLayer<double> layer(lstm_weights(3, 2, 3, g), false);
    Parameter<double> x(ref::random_tensor<double>({1, 5, 5, 2}, g));
    auto proj = projection({5, 5, 3}, g);
    auto ps = layer.weights().named_parameters("");
    ps.push_back({"x", &x});
    typename ConvLstmLayer<double>::Cache cache;
    record("convlstm_step", grad_check(ps, [&] { return proj(layer.forward(x.value)); },
                                       [&] {
                                         layer.forward(x.value, &cache);
                                         add_into(x.grad, layer.backward(cache, proj.coeff, true));
                                       },
                                       opt));
  }
  {
    std::vector<ConvLstmLayer<double>> stack;
    stack.emplace_back(lstm_weights(3, 2, 4, g), true);
    stack.emplace_back(lstm_weights(3, 4, 3, g), false);
    Parameter<double> x(ref::random_tensor<double>({4, 6, 6, 2}, g));
    auto proj = projection({6, 6, 3}, g);
    std::vector<NamedParameter<double>> ps{{"x", &x}};
    for (std::size_t l = 0; l < stack.size(); ++l) {
      auto lp = stack[l].weights().named_parameters("l" + std::to_string(l) + ".");
      ps.insert(ps.end(), lp.begin(), lp.end());
    }
    auto forward = [&] {
      Tensor<double> h = x.value;
      for (auto& layer : stack) h = layer.forward(h);
      return proj(h);
    };
    auto backward = [&] {
      std::vector<typename ConvLstmLayer<double>::Cache> caches(stack.size());
      Tensor<double> h = x.value;
      for (std::size_t l = 0; l < stack.size(); ++l) h = stack[l].forward(h, &caches[l]);
      Tensor<double> gr = proj.coeff;
      for (std::size_t l = stack.size(); l-- > 0;) gr = stack[l].backward(caches[l], gr, true);
      add_into(x.grad, gr);
    };
    record("bptt_T4", grad_check(ps, forward, backward, opt));
  }
  const double secs = seconds_since(t0);
  o.require(secs < 300.0, "runtime " + fmt("%.1f", secs) + " s exceeds 300 s");
  o.detail = "max rel err: " + summary + ", " + fmt("%.1f", secs) + " s" + (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

// ---- 3. ConvLSTM scalar reduction ----

Outcome convlstm_scalar() {
  Outcome o;
  double worst = 0;
  constexpr std::uint64_t kSeeds = 20;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    Gen g(seed);
    std::uniform_real_distribution<double> d(-1.5, 1.5);
    ref::ScalarLstmWeights p{d(g), d(g), d(g), d(g), d(g), d(g), d(g), d(g), d(g), d(g), d(g), d(g)};
    std::vector<double> xs(5);
    for (auto& x : xs) x = d(g);
    const auto expect = ref::scalar_lstm(xs, p);
    ConvLstmWeights<double> w(1, 1, 1);
    const double W[4] = {p.wf, p.wi, p.wo, p.wc}, U[4] = {p.uf, p.ui, p.uo, p.uc}, B[4] = {p.bf, p.bi, p.bo, p.bc};
    for (std::size_t q = 0; q < 4; ++q) {
      w.W[q].value[0] = W[q];
      w.U[q].value[0] = U[q];
      w.b[q].value[0] = B[q];
    }
    auto state = ConvLstmState<double>::zeros(1, 1, 1);
    for (std::size_t t = 0; t < xs.size(); ++t) {
      state = convlstm_step(Tensor<double>({1, 1, 1}, xs[t]), state, w);
      worst = std::max({worst, std::abs(state.cell[0] - expect[t].c), std::abs(state.hidden[0] - expect[t].h)});
    }
  }
  o.require(worst <= 1e-10, "max err " + fmt("%.3g", worst));
  o.detail = std::to_string(kSeeds) + " seeds x length 5, max err " + fmt("%.3g", worst);
  return o;
}

// ---- 4. pipeline exactness ----

FrameSequence blank_clip(std::size_t n, double fps) {
  FrameSequence s;
  s.fps = fps;
  for (std::size_t i = 0; i < n; ++i) s.frames.emplace_back(Shape{2, 2, 3}, static_cast<float>(i) / 1000.0f);
  return s;
}

Outcome pipeline_exactness() {
  Outcome o;
  const auto clip = blank_clip(150, 30.0);
  o.require(sample_frames(clip, 3).size() == 50, "150 frames at stride 3 gave " +
                                                    std::to_string(sample_frames(clip, 3).size()));
  o.require(sample_frames(clip, 5).size() == 30, "150 frames at stride 5 gave " +
                                                    std::to_string(sample_frames(clip, 5).size()));
  std::size_t cases = 0;
  for (double fps : {24.0, 25.0, 30.0}) {
    const auto len = static_cast<std::size_t>(5.0 * fps);
    for (std::size_t n = 0; n <= 4 * len + 3; n += 7) {
      const auto clips = segment_clips(blank_clip(n, fps));
      bool ok = clips.size() == n / len;
      for (const auto& c : clips) ok = ok && c.size() == len;
      o.require(ok, std::to_string(n) + " frames at " + fmt("%g", fps) + " fps");
      ++cases;
    }
  }
  Tensor<int> px({3}, std::vector<int>{0, 128, 255});
  const auto n = normalize(px);
  const double expect[3] = {0.0, 0.501961, 1.0};
  for (std::size_t i = 0; i < 3; ++i) {
    o.require(std::abs(n[i] - expect[i]) <= 1e-6, "normalize(" + std::to_string(px[i]) + ") = " + fmt("%.7f", n[i]));
  }
  o.detail = "150->50 and 150->30; " + std::to_string(cases) + " segmentation cases; normalization " +
             fmt("%.6f", n[1]) + (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

// ---- 5. optical-flow fidelity ----

Outcome flow_fidelity() {
  Outcome o;
  const HornSchunckOptions hs;
  Gen g(505);
  auto a = ref::random_tensor<float>({24, 31}, g, 0.0, 1.0);
  const auto still = horn_schunck(a, a, hs.alpha, hs.iterations);
  bool zero = true;
  for (std::size_t i = 0; i < still.u.size(); ++i) zero = zero && still.u[i] == 0.0f && still.v[i] == 0.0f;
  o.require(zero, "zero motion gave nonzero flow");

  const auto f0 = scenes::textured(64, 64), f1 = scenes::textured(64, 64, 1.0, 0.0);
  const auto f = horn_schunck(f0, f1, hs.alpha, hs.iterations);
  double mean_u = 0;
  for (std::size_t y = 8; y < 56; ++y)
    for (std::size_t x = 8; x < 56; ++x) mean_u += f.u.at(y, x);
  mean_u /= 48.0 * 48.0;
  o.require(mean_u >= 0.6 && mean_u <= 1.2, "mean interior u " + fmt("%.4f", mean_u) + " outside [0.6, 1.2]");

  std::size_t sweeps = 0, violations = 0;
  for (int trial = 0; trial < 3; ++trial) {
    auto p = ref::random_tensor<float>({20, 24}, g, 0.0, 1.0);
    auto q = ref::random_tensor<float>({20, 24}, g, 0.0, 1.0);
    FlowField<float> z{Tensor<float>(p.dims()), Tensor<float>(p.dims())};
    double prev = horn_schunck_energy(p, q, z, hs.alpha);
    horn_schunck<float>(p, q, hs.alpha, hs.iterations, [&](std::size_t, const FlowField<float>& cur) {
      const double e = horn_schunck_energy(p, q, cur, hs.alpha);
      if (e > prev * (1.0 + 1e-6)) ++violations;
      prev = e;
      ++sweeps;
    });
  }
  o.require(violations == 0, std::to_string(violations) + " sweeps increased the objective");
  o.detail = "zero motion exact; mean interior u " + fmt("%.4f", mean_u) + " at alpha 15 / 100 sweeps; " +
             std::to_string(sweeps) + " sweeps monotone" + (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

// ---- 6. metric oracle ----

Outcome metric_oracle() {
  Outcome o;
  Gen g(606);
  std::size_t trials = 0, mismatches = 0;
  while (trials < 1000) {
    const std::size_t n = 2 + g() % 11;
    std::vector<Probabilities> probs(n);
    std::vector<Label> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double p = static_cast<double>(g() % 9) / 8.0;
      probs[i] = {p, 1.0 - p};
      labels[i] = g() % 2 == 0 ? Label::accident : Label::normal;
    }
    const auto acc = std::count(labels.begin(), labels.end(), Label::accident);
    if (acc == 0 || acc == static_cast<std::ptrdiff_t>(n)) continue;
    std::vector<double> pa(n), pn(n);
    std::vector<bool> is_acc(n), is_norm(n);
    for (std::size_t i = 0; i < n; ++i) {
      pa[i] = probs[i].accident;
      pn[i] = probs[i].normal;
      is_acc[i] = labels[i] == Label::accident;
      is_norm[i] = !is_acc[i];
    }
    const double ap_a = ref::brute_force_ap(pa, is_acc), ap_n = ref::brute_force_ap(pn, is_norm);
    const auto r = compute_metrics(probs, labels);
    if (r.ap_accident != ap_a || r.ap_normal != ap_n || r.map != (ap_a + ap_n) / 2.0) ++mismatches;
    ++trials;
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " AP/MAP mismatches");

  std::size_t count_cases = 0, bad = 0;
  for (std::size_t tp = 0; tp <= 8; ++tp)
    for (std::size_t fp = 0; fp <= 8; ++fp)
      for (std::size_t fn = 0; fn <= 8; ++fn)
        for (std::size_t tn = 0; tn <= 8; ++tn) {
          const Confusion c{tp, fp, fn, tn};
          const double p = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
          const double r = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
          const double f1 = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
          const std::size_t total = tp + fp + fn + tn;
          const double a = total ? static_cast<double>(tp + tn) / static_cast<double>(total) : 0.0;
          ++count_cases;
          if (c.precision() != p || c.recall() != r || std::abs(c.f1() - f1) > 1e-15 || c.accuracy() != a ||
              c.f1() < 0 || c.f1() > 1) {
            ++bad;
          }
        }
  o.require(bad == 0, std::to_string(bad) + " confusion identity violations");
  o.detail = std::to_string(trials) + " AP/MAP trials exact; " + std::to_string(count_cases) +
             " confusion count tuples" + (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

// ---- shared synthetic training data ----

struct ToyData {
  VariantConfig cfg;
  std::vector<Example> train, test;
};

VariantConfig toy_config(const std::string& file, std::uint64_t seed) {
  auto cfg = load_config_file(kSource / "configs" / file);
  cfg.model.seed = seed;
  cfg.train.seed = seed;
  return cfg;
}

const ToyData& toy_data() {
  static const ToyData data = [] {
    ToyData d;
    d.cfg = toy_config("toy.cfg", 0);
    const auto dir = fs::temp_directory_path() / "accdet_acceptance" / "synthetic";
    fs::remove_all(dir);
    const auto m = write_synthetic_dataset(dir, {20, 0, 10}, 0);
    d.train = build_split(m, Split::train, d.cfg.pipeline, true);
    d.test = build_split(m, Split::test, d.cfg.pipeline, true);
    return d;
  }();
  return data;
}

struct TrainRun {
  Model<float> model;
  TrainHistory history;
};

TrainRun train_toy(const VariantConfig& cfg, std::span<const Example> train) {
  TrainRun run{Model<float>(cfg.model), {}};
  TrainOptions opt;
  opt.flow = cfg.pipeline.flow;
  run.history = Trainer<float>(run.model, cfg.train, opt).fit(train);
  return run;
}

std::vector<Example> strip_flow(std::span<const Example> ex) {
  std::vector<Example> out(ex.begin(), ex.end());
  for (auto& e : out) e.flow = {};
  return out;
}

bool same_parameters(Model<float>& a, Model<float>& b) {
  auto pa = a.named_parameters(), pb = b.named_parameters();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (!std::ranges::equal(pa[i].param->value.values(), pb[i].param->value.values())) return false;
  }
  auto ba = a.named_buffers(), bb = b.named_buffers();
  for (std::size_t i = 0; i < ba.size(); ++i) {
    if (!std::ranges::equal(ba[i].tensor->values(), bb[i].tensor->values())) return false;
  }
  return true;
}

// ---- 7. learning smoke test ----

Outcome learning_smoke() {
  Outcome o;
  const auto t0 = Clock::now();
  const auto& data = toy_data();
  const auto& cfg = data.cfg;
  o.require(cfg.train.epochs <= 50, "toy config trains for more than 50 epochs");
  auto first = train_toy(cfg, data.train);
  auto second = train_toy(cfg, data.train);
  const double fit_accuracy = evaluate_examples(first.model, std::span<const Example>(data.train)).accuracy();
  std::size_t reached = 0;
  for (const auto& e : first.history.epochs) {
    if (e.train_accuracy >= 0.95) {
      reached = e.epoch;
      break;
    }
  }
  o.require(fit_accuracy >= 0.95, "train accuracy " + fmt("%.3f", fit_accuracy) + " below 0.95");
  o.require(same_parameters(first.model, second.model), "two seeded runs produced different weights");
  o.require(format_history(first.history) == format_history(second.history), "two seeded runs differ in history");

  auto frozen_cfg = cfg;
  frozen_cfg.model.backbone.trainable_last_n = 1;
  frozen_cfg.train.epochs = 5;
  Model<float> before(frozen_cfg.model);
  auto frozen = train_toy(frozen_cfg, data.train);
  auto pb = before.named_parameters(), pa = frozen.model.named_parameters();
  std::size_t frozen_count = 0, frozen_changed = 0, trainable_changed = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const bool same = std::ranges::equal(pa[i].param->value.values(), pb[i].param->value.values());
    if (!pa[i].param->trainable) {
      ++frozen_count;
      frozen_changed += same ? 0 : 1;
    } else {
      trainable_changed += same ? 0 : 1;
    }
  }
  o.require(frozen_count > 0, "frozen variant has no frozen parameters");
  o.require(frozen_changed == 0, std::to_string(frozen_changed) + " frozen parameters changed");
  o.require(trainable_changed > 0, "no trainable parameter changed");
  const double secs = seconds_since(t0);
  o.require(secs < 1800.0, "runtime " + fmt("%.0f", secs) + " s exceeds 30 min");
  o.detail = std::to_string(data.train.size()) + " clips, final train accuracy " + fmt("%.3f", fit_accuracy) +
             " (>= 0.95 first at epoch " + std::to_string(reached) + " of " +
             std::to_string(first.history.epochs.size()) + "), reruns bit-identical; " +
             std::to_string(frozen_count) + " frozen tensors bit-identical, " + std::to_string(trainable_changed) +
             " trainable tensors updated; " + fmt("%.1f", secs) + " s" + (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

// ---- 8. variant differentiation ----

Outcome variant_differentiation() {
  Outcome o;
  const auto& data = toy_data();
  const auto rgb_train = strip_flow(data.train), rgb_test = strip_flow(data.test);
  std::size_t wins = 0;
  std::string rows;
  const std::vector<std::uint64_t> seeds{0, 1, 2};
  for (auto seed : seeds) {
    const auto two_cfg = toy_config("toy.cfg", seed);
    const auto rgb_cfg = toy_config("toy_rgb_only.cfg", seed);
    auto two = train_toy(two_cfg, data.train);
    auto rgb = train_toy(rgb_cfg, rgb_train);
    const auto r2 = evaluate(two.model, std::span<const Example>(data.test), two_cfg.name);
    const auto r1 = evaluate(rgb.model, std::span<const Example>(rgb_test), rgb_cfg.name);
    wins += r2.map >= r1.map ? 1 : 0;
    rows += (rows.empty() ? "" : ", ") + std::string("seed ") + std::to_string(seed) + " " + fmt("%.3f", r2.map) +
            " vs " + fmt("%.3f", r1.map);
  }
  o.require(2 * wins > seeds.size(), "two-stream MAP >= rgb-only MAP on only " + std::to_string(wins) + " seeds");
  o.detail = "test MAP two-stream vs rgb-only: " + rows + "; " + std::to_string(wins) + "/" +
             std::to_string(seeds.size()) + " seeds" + (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

// ---- 9. edge-budget benchmark ----

Outcome edge_benchmark() {
  Outcome o;
  const auto cfg = builtin_variant("trainable_twostream");
  Model<float> model(cfg.model);
  const auto report = cli::bench_command(model, cfg, 5, 1);
  std::cout << cli::format_bench(report);
  const double stages = report.flow_ms + report.backbone_ms + report.head_ms;
  o.require(cfg.pipeline.depth == 30 && cfg.pipeline.frame_size == 224, "default config is not T=30 at 224x224");
  o.require(report.median_ms <= 2000.0, "median " + fmt("%.0f", report.median_ms) + " ms exceeds 2000 ms");
  o.require(report.median_ms <= report.p95_ms, "median above p95");
  o.detail = "T=" + std::to_string(report.depth) + " " + std::to_string(report.frame_size) + "x" +
             std::to_string(report.frame_size) + ", median " + fmt("%.0f", report.median_ms) + " ms, p95 " +
             fmt("%.0f", report.p95_ms) + " ms, stages " + fmt("%.0f", stages) + " ms" +
             (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

// ---- 10. determinism ----

std::map<std::string, std::string> dir_contents(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream f(e.path(), std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    files[fs::relative(e.path(), dir).string()] = os.str();
  }
  return files;
}

Outcome determinism() {
  Outcome o;
  const auto root = fs::temp_directory_path() / "accdet_acceptance" / "determinism";
  fs::remove_all(root);
  std::array<std::string, 2> histories, reports;
  std::array<std::map<std::string, std::string>, 2> weights;
  for (std::size_t run = 0; run < 2; ++run) {
    const auto dir = root / ("run" + std::to_string(run));
    const auto m = write_synthetic_dataset(dir / "data", {8, 0, 4}, 9);
    auto cfg = toy_config("toy.cfg", 9);
    cfg.train.epochs = 5;
    const auto train = build_split(m, Split::train, cfg.pipeline, true);
    const auto test = build_split(m, Split::test, cfg.pipeline, true);
    auto t = train_toy(cfg, train);
    save_model(dir / "weights", cfg, t.model);
    weights[run] = dir_contents(dir / "weights");
    histories[run] = format_history(t.history);
    reports[run] = format_report(evaluate(t.model, std::span<const Example>(test), cfg.name));
  }
  o.require(!weights[0].empty() && weights[0] == weights[1], "weight files differ");
  o.require(histories[0] == histories[1], "histories differ");
  o.require(reports[0] == reports[1], "reports differ");
  o.detail = std::to_string(weights[0].size()) + " weight files, history and report byte-identical across two runs" +
             (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"kernel oracle equivalence", kernel_oracles},
      {"gradient suite", gradient_suite},
      {"convlstm scalar reduction", convlstm_scalar},
      {"pipeline exactness", pipeline_exactness},
      {"optical-flow fidelity", flow_fidelity},
      {"metric oracle", metric_oracle},
      {"learning smoke test", learning_smoke},
      {"variant differentiation", variant_differentiation},
      {"edge-budget benchmark", edge_benchmark},
      {"determinism", determinism},
  };
  std::size_t failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << (i + 1) << " " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
