// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "accdet/cli/commands.hpp"

namespace {

using namespace accdet;
using namespace accdet::cli;

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--variant", o.variant, "Builtin variant: rgb_only, nontrainable_twostream, "
                                          "augmented_twostream, trainable_twostream");
  cmd->add_option("--config", o.config, "key=value config file applied over the variant defaults")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Model and training seed");
  cmd->add_option("--stride", o.stride, "Frame sampling stride");
  cmd->add_option("--depth", o.depth, "Window depth T in sampled frames");
  cmd->add_option("--window-stride", o.window_stride, "Window stride S in sampled frames");
  cmd->add_option("--lr", o.lr, "Learning rate");
  cmd->add_option("--epochs", o.epochs, "Training epochs");
}

// Configuration of a saved model with the pipeline flags applied on top.
LoadedModel<float> load_with_overrides(const fs::path& weights, Overrides o, VariantConfig& cfg) {
  auto loaded = load_model<float>(weights);
  if (o.variant && *o.variant != loaded.config.name) {
    throw ConfigError("--variant " + *o.variant + " does not match the weights' variant " + loaded.config.name);
  }
  cfg = loaded.config;
  if (o.config) cfg = load_config_file(*o.config, cfg);
  if (o.stride) cfg.pipeline.sample_stride = *o.stride;
  if (o.depth) cfg.pipeline.depth = *o.depth;
  if (o.window_stride) cfg.pipeline.window_stride = *o.window_stride;
  cfg.validate();
  if (format_config(VariantConfig{"", cfg.model, {}, {}}) !=
      format_config(VariantConfig{"", loaded.config.model, {}, {}})) {
    throw ConfigError("--config may not change the model structure of saved weights");
  }
  return loaded;
}

std::ostream& open_or(std::optional<fs::path> path, std::ofstream& file, std::ostream& fallback) {
  if (!path) return fallback;
  if (path->has_parent_path()) fs::create_directories(path->parent_path());
  file.open(*path, std::ios::trunc);
  if (!file) throw DataError("cannot write " + path->string());
  return file;
}

fs::path default_cache(const fs::path& manifest) { return manifest.parent_path() / "cache"; }

int run(int argc, char** argv) {
  CLI::App app{"Two-stream I3D + ConvLSTM traffic accident detector"};
  app.require_subcommand(1);

  Overrides o;
  std::optional<fs::path> input, manifest, cache, out, weights, frames;
  std::string split = "test", clip_id;
  double threshold = kDecisionThreshold;
  std::size_t repetitions = 5, warmup = 1;
  bool timings = false;
  SyntheticSplitSizes sizes;
  SyntheticOptions synth;
  std::uint64_t synth_seed = 0;

  auto* pre = app.add_subcommand("preprocess", "Segment, sample and resize frames; cache clips and flow stacks");
  add_overrides(pre, o);
  auto* pre_src = pre->add_option_group("source");
  pre_src->add_option("--input", input, "Frame directory")->check(CLI::ExistingDirectory);
  pre_src->add_option("--manifest", manifest, "Manifest CSV")->check(CLI::ExistingFile);
  pre_src->require_option(1);
  pre->add_option("--out", out, "Cache directory")->required();

  auto* train = app.add_subcommand("train", "Train a variant on the manifest's train split");
  add_overrides(train, o);
  train->add_option("--manifest", manifest, "Manifest CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--cache", cache, "Cache root written by preprocess (default: <manifest dir>/cache)");
  train->add_option("--out", out, "Output directory for weights and history")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate on one split and print a metrics report");
  add_overrides(eval, o);
  eval->add_option("--manifest", manifest, "Manifest CSV")->required()->check(CLI::ExistingFile);
  eval->add_option("--cache", cache, "Cache root written by preprocess (default: <manifest dir>/cache)");
  eval->add_option("--weights", weights, "Directory written by train; untrained weights when omitted")
      ->check(CLI::ExistingDirectory);
  eval->add_option("--split", split, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));
  eval->add_option("--out", out, "Also write the report to this file");

  auto* detect = app.add_subcommand("detect", "Sliding-window detection over a frame stream");
  add_overrides(detect, o);
  detect->add_option("--frames", frames, "Frame directory read as a stream")->required();
  detect->add_option("--weights", weights, "Directory written by train")->required()->check(CLI::ExistingDirectory);
  detect->add_option("--threshold", threshold, "Accident when p_accident exceeds this")
      ->check(CLI::Range(0.0, 1.0));
  detect->add_option("--clip-id", clip_id, "Identifier printed with each window (default: directory name)");
  detect->add_option("--out", out, "Write window records here instead of stdout");
  detect->add_flag("--timings", timings, "Print per-window latency to stderr");

  auto* bench = app.add_subcommand("bench", "Single-window latency benchmark on synthetic input");
  add_overrides(bench, o);
  bench->add_option("--weights", weights, "Directory written by train; random weights when omitted")
      ->check(CLI::ExistingDirectory);
  bench->add_option("--repetitions", repetitions, "Timed repetitions")->check(CLI::PositiveNumber);
  bench->add_option("--warmup", warmup, "Untimed warm-up repetitions");
  bench->add_option("--out", out, "Also write the report to this file");

  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic moving-square dataset and manifest");
  synth_cmd->add_option("--out", out, "Output directory")->required();
  synth_cmd->add_option("--train", sizes.train, "Training clips");
  synth_cmd->add_option("--val", sizes.val, "Validation clips");
  synth_cmd->add_option("--test", sizes.test, "Test clips");
  synth_cmd->add_option("--seed", synth_seed, "Scene seed");
  synth_cmd->add_option("--frame-size", synth.frame_size, "Frame edge in pixels")->check(CLI::Range(8, 4096));
  synth_cmd->add_option("--frames", synth.frames, "Frames per clip")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--fps", synth.fps, "Frame rate")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kUsage;
  }

  if (pre->parsed()) {
    const auto cfg = resolve_config(o);
    const auto summary = input ? preprocess_dir(*input, *out, cfg)
                               : preprocess_manifest(load_manifest(*manifest), *out, cfg);
    std::cout << format_preprocess(summary);
  } else if (train->parsed()) {
    const auto cfg = resolve_config(o);
    if (cfg.train.learning_rate == 0.0) std::cerr << "warning: learning rate is 0; weights will not change\n";
    const auto m = load_manifest(*manifest);
    const auto r = train_command(m, cache.value_or(default_cache(*manifest)), cfg, *out, std::cerr);
    std::cout << "variant=" << cfg.name << "\ntrain_windows=" << r.train_examples
              << "\nval_windows=" << r.val_examples << "\nepochs=" << r.history.epochs.size()
              << "\nfinal_train_loss=" << detail::format_double(r.history.epochs.back().train_loss)
              << "\nfinal_train_accuracy=" << detail::format_double(r.history.epochs.back().train_accuracy)
              << "\nweights=" << out->string() << '\n';
  } else if (eval->parsed()) {
    VariantConfig cfg;
    std::optional<LoadedModel<float>> loaded;
    if (weights) {
      loaded = load_with_overrides(*weights, o, cfg);
    } else {
      cfg = resolve_config(o);
      loaded = LoadedModel<float>{cfg, Model<float>(cfg.model)};
    }
    const auto m = load_manifest(*manifest);
    const auto report = eval_command(m, cache.value_or(default_cache(*manifest)), loaded->model, cfg,
                                     parse_split(split));
    const auto text = format_report(report);
    std::cout << text << "#table\n" << kComparisonHeader << '\n' << format_row(report) << '\n';
    if (out) write_text(*out, text);
  } else if (detect->parsed()) {
    VariantConfig cfg;
    auto loaded = load_with_overrides(*weights, o, cfg);
    std::ofstream file;
    std::ostream& dst = open_or(out, file, std::cout);
    std::ofstream null_sink;
    std::ostream& tim = timings ? std::cerr : static_cast<std::ostream&>(null_sink);
    const std::string id = clip_id.empty() ? frames->filename().string() : clip_id;
    const auto summary = detect_command(*frames, loaded.model, cfg.pipeline, threshold, id, dst, tim);
    std::cerr << "windows=" << summary.windows << " max_buffered_frames=" << summary.max_buffered << '\n';
  } else if (bench->parsed()) {
    VariantConfig cfg;
    std::optional<LoadedModel<float>> loaded;
    if (weights) {
      loaded = load_with_overrides(*weights, o, cfg);
    } else {
      cfg = resolve_config(o);
      loaded = LoadedModel<float>{cfg, Model<float>(cfg.model)};
    }
    const auto text = format_bench(bench_command(loaded->model, cfg, repetitions, warmup));
    std::cout << text;
    if (out) write_text(*out, text);
  } else if (synth_cmd->parsed()) {
    const auto m = write_synthetic_dataset(*out, sizes, synth_seed, synth);
    std::cout << "clips=" << m.rows.size() << "\nmanifest=" << (*out / "manifest.csv").string() << '\n';
  }
  return kSuccess;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const accdet::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const accdet::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const accdet::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const accdet::ShapeError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
}
