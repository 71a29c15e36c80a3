// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "accdet/core/error.hpp"
#include "accdet/core/softmax.hpp"
#include "accdet/model/config.hpp"

namespace accdet {

inline constexpr double kDecisionThreshold = 0.5;

// Accident is the positive class.
struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  double precision() const { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp); }
  double recall() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn); }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  double accuracy() const {
    return total() == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(total());
  }
};

// A window is called an accident when pAccident strictly exceeds the threshold.
inline bool is_accident(double p_accident, double threshold = kDecisionThreshold) { return p_accident > threshold; }

inline Confusion confusion(std::span<const double> p_accident, std::span<const Label> labels,
                           double threshold = kDecisionThreshold) {
  if (p_accident.size() != labels.size()) throw ShapeError("confusion: scores and labels differ in length");
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool pred = is_accident(p_accident[i], threshold);
    const bool pos = labels[i] == Label::accident;
    if (pred && pos) ++c.tp;
    if (pred && !pos) ++c.fp;
    if (!pred && pos) ++c.fn;
    if (!pred && !pos) ++c.tn;
  }
  return c;
}

// Ranks by descending score (ties keep input order) and sums
// (R_k - R_{k-1}) * P_k over the ranks k holding a positive.
inline double average_precision(std::span<const double> scores, std::span<const bool> positive) {
  if (scores.empty() || scores.size() != positive.size()) {
    throw ShapeError("average_precision: scores and labels must be nonempty and equal in length");
  }
  const std::size_t npos = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), true));
  if (npos == 0) throw DataError("average precision undefined: no positive examples");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const double total = static_cast<double>(npos);
  double ap = 0.0, prev_recall = 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 1; k <= order.size(); ++k) {
    const bool pos = positive[order[k - 1]];
    if (pos) ++hits;
    const double recall = static_cast<double>(hits) / total;
    const double precision = static_cast<double>(hits) / static_cast<double>(k);
    if (pos) ap += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return ap;
}

inline double average_precision(std::span<const Probabilities> probs, std::span<const Label> labels, Label cls) {
  if (probs.size() != labels.size()) throw ShapeError("average_precision: scores and labels differ in length");
  std::vector<double> scores(probs.size());
  auto pos = std::make_unique<bool[]>(labels.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    scores[i] = probs[i].of(cls);
    pos[i] = labels[i] == cls;
  }
  return average_precision(scores, std::span<const bool>(pos.get(), labels.size()));
}

struct MetricsReport {
  std::string variant;
  Confusion counts;
  double accuracy = 0, precision = 0, recall = 0, f1 = 0, map = 0;
  double ap_accident = 0, ap_normal = 0;
};

// Threshold metrics from pAccident > 0.5; MAP is the macro mean of both
// per-class average precisions.
inline MetricsReport compute_metrics(std::span<const Probabilities> probs, std::span<const Label> labels,
                                     const std::string& variant = {}) {
  if (probs.empty()) throw DataError("cannot evaluate an empty split");
  if (probs.size() != labels.size()) throw ShapeError("compute_metrics: predictions and labels differ in length");
  std::vector<double> pa(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) pa[i] = probs[i].accident;
  MetricsReport r;
  r.variant = variant;
  r.counts = confusion(pa, labels);
  r.accuracy = r.counts.accuracy();
  r.precision = r.counts.precision();
  r.recall = r.counts.recall();
  r.f1 = r.counts.f1();
  r.ap_accident = average_precision(probs, labels, Label::accident);
  r.ap_normal = average_precision(probs, labels, Label::normal);
  r.map = (r.ap_accident + r.ap_normal) / 2.0;
  return r;
}

inline std::string format_report(const MetricsReport& r) {
  using detail::format_double;
  std::ostringstream os;
  os << "#variant=" << r.variant << '\n';
  os << "precision=" << format_double(r.precision) << '\n';
  os << "recall=" << format_double(r.recall) << '\n';
  os << "f1=" << format_double(r.f1) << '\n';
  os << "accuracy=" << format_double(r.accuracy) << '\n';
  os << "map=" << format_double(r.map) << '\n';
  os << "ap_accident=" << format_double(r.ap_accident) << '\n';
  os << "ap_normal=" << format_double(r.ap_normal) << '\n';
  os << "tp=" << r.counts.tp << '\n';
  os << "fp=" << r.counts.fp << '\n';
  os << "fn=" << r.counts.fn << '\n';
  os << "tn=" << r.counts.tn << '\n';
  os << "count=" << r.counts.total() << '\n';
  return os.str();
}

inline MetricsReport parse_report(std::string_view text) {
  std::istringstream is{std::string(text)};
  std::string line;
  std::map<std::string, std::string> kv;
  MetricsReport r;
  bool have_variant = false;
  while (std::getline(is, line)) {
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.rfind("#variant=", 0) == 0) {
      r.variant = line.substr(9);
      have_variant = true;
      continue;
    }
    if (line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("report line without '=': " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  if (!have_variant) throw DataError("report lacks a #variant header");
  auto num = [&](const char* key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw DataError(std::string("report lacks '") + key + "'");
    try {
      return detail::parse_double(key, it->second);
    } catch (const ConfigError& e) {
      throw DataError(e.what());
    }
  };
  auto count = [&](const char* key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw DataError(std::string("report lacks '") + key + "'");
    try {
      return detail::parse_size(key, it->second);
    } catch (const ConfigError& e) {
      throw DataError(e.what());
    }
  };
  r.precision = num("precision");
  r.recall = num("recall");
  r.f1 = num("f1");
  r.accuracy = num("accuracy");
  r.map = num("map");
  r.ap_accident = num("ap_accident");
  r.ap_normal = num("ap_normal");
  r.counts = {count("tp"), count("fp"), count("fn"), count("tn")};
  if (count("count") != r.counts.total()) throw DataError("report count does not match confusion counts");
  return r;
}

inline constexpr const char* kComparisonHeader = "variant,precision,recall,f1,accuracy,map";

inline std::string format_row(const MetricsReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s,%.4f,%.4f,%.4f,%.4f,%.4f", r.variant.c_str(), r.precision, r.recall, r.f1,
                r.accuracy, r.map);
  return buf;
}

// Side-by-side rows ordered like the builtin variant list; unknown variant
// names follow in their given order.
inline std::string format_comparison(std::vector<MetricsReport> reports, std::span<const std::string> order) {
  auto rank = [&](const MetricsReport& r) {
    const auto it = std::find(order.begin(), order.end(), r.variant);
    return static_cast<std::size_t>(it - order.begin());
  };
  std::stable_sort(reports.begin(), reports.end(),
                   [&](const MetricsReport& a, const MetricsReport& b) { return rank(a) < rank(b); });
  std::string out = std::string(kComparisonHeader) + '\n';
  for (const auto& r : reports) out += format_row(r) + '\n';
  return out;
}

}  // namespace accdet
