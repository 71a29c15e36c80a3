// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "accdet/core/error.hpp"
#include "accdet/core/softmax.hpp"
#include "accdet/model/config.hpp"
#include "accdet/video/frame_io.hpp"

namespace accdet {

enum class Split { train = 0, val = 1, test = 2 };
enum class Source { trafficam = 0, dashcam = 1, external = 2 };

inline constexpr std::array<const char*, 3> kSplitNames{"train", "val", "test"};
inline constexpr std::array<const char*, 3> kSourceNames{"trafficam", "dashcam", "external"};
inline constexpr const char* kManifestHeader = "clip_id,frames_dir,label,split,source";

inline std::string_view to_string(Split s) { return kSplitNames[static_cast<std::size_t>(s)]; }
inline std::string_view to_string(Source s) { return kSourceNames[static_cast<std::size_t>(s)]; }

inline Split parse_split(std::string_view s) {
  for (std::size_t i = 0; i < kSplitNames.size(); ++i) {
    if (s == kSplitNames[i]) return static_cast<Split>(i);
  }
  throw DataError("unknown split '" + std::string(s) + "'");
}

inline Source parse_source(std::string_view s) {
  for (std::size_t i = 0; i < kSourceNames.size(); ++i) {
    if (s == kSourceNames[i]) return static_cast<Source>(i);
  }
  throw DataError("unknown source '" + std::string(s) + "'");
}

struct ManifestRow {
  std::string clip_id;
  std::filesystem::path frames_dir;  // resolved against the manifest's directory
  Label label = Label::normal;
  Split split = Split::train;
  Source source = Source::trafficam;
};

struct DatasetManifest {
  std::vector<ManifestRow> rows;

  std::vector<ManifestRow> split(Split s) const {
    std::vector<ManifestRow> out;
    for (const auto& r : rows) {
      if (r.split == s) out.push_back(r);
    }
    return out;
  }
};

struct ManifestOptions {
  bool check_frames = true;  // require every frames_dir to hold frames and fps metadata
};

inline DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir,
                                      const ManifestOptions& options = {}) {
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  DatasetManifest m;
  std::set<std::string> ids;
  bool header = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    const std::string where = "manifest row " + std::to_string(line_no);
    if (!header) {
      if (detail::trim(line) != kManifestHeader) {
        throw DataError("manifest header must be '" + std::string(kManifestHeader) + "'");
      }
      header = true;
      continue;
    }
    const auto cells = detail::split(line, ',');
    if (cells.size() != 5) throw DataError(where + ": expected 5 fields, got " + std::to_string(cells.size()));
    ManifestRow r;
    r.clip_id = detail::trim(cells[0]);
    if (r.clip_id.empty()) throw DataError(where + ": empty clip_id");
    const std::filesystem::path dir = detail::trim(cells[1]);
    r.frames_dir = dir.is_absolute() ? dir : base_dir / dir;
    try {
      r.label = parse_label(detail::trim(cells[2]));
    } catch (const std::exception& e) {
      throw DataError(where + ": " + e.what());
    }
    try {
      r.split = parse_split(detail::trim(cells[3]));
      r.source = parse_source(detail::trim(cells[4]));
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    if (!ids.insert(r.clip_id).second) throw DataError(where + ": duplicate clip_id '" + r.clip_id + "'");
    if (options.check_frames) {
      try {
        if (count_frames(r.frames_dir) == 0) throw DataError("no frames in " + r.frames_dir.string());
        read_fps(r.frames_dir);
      } catch (const DataError& e) {
        throw DataError(where + ": " + e.what());
      }
    }
    m.rows.push_back(std::move(r));
  }
  if (!header) throw DataError("manifest is empty");
  return m;
}

inline DatasetManifest load_manifest(const std::filesystem::path& path, const ManifestOptions& options = {}) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot read manifest " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_manifest(ss.str(), path.parent_path(), options);
}

inline std::string format_manifest(const DatasetManifest& m, const std::filesystem::path& base_dir = {}) {
  std::ostringstream os;
  os << kManifestHeader << '\n';
  for (const auto& r : m.rows) {
    const auto dir = base_dir.empty() ? r.frames_dir : std::filesystem::relative(r.frames_dir, base_dir);
    os << r.clip_id << ',' << dir.generic_string() << ',' << to_string(r.label) << ',' << to_string(r.split) << ','
       << to_string(r.source) << '\n';
  }
  return os.str();
}

// Row counts by split, source and label.
struct SplitSummary {
  // counts[split][source][label]
  std::array<std::array<std::array<std::size_t, 2>, 3>, 3> counts{};

  std::size_t count(Split s, Source src, Label l) const {
    return counts[static_cast<std::size_t>(s)][static_cast<std::size_t>(src)][static_cast<std::size_t>(l)];
  }
  std::size_t source_total(Split s, Source src) const {
    return count(s, src, Label::accident) + count(s, src, Label::normal);
  }
  std::size_t total(Split s) const {
    std::size_t n = 0;
    for (std::size_t src = 0; src < 3; ++src) n += source_total(s, static_cast<Source>(src));
    return n;
  }
};

inline SplitSummary summarize(const DatasetManifest& m) {
  SplitSummary s;
  for (const auto& r : m.rows) {
    ++s.counts[static_cast<std::size_t>(r.split)][static_cast<std::size_t>(r.source)]
              [static_cast<std::size_t>(r.label)];
  }
  return s;
}

// One line per split: accident/normal/total per source, then the split total.
inline std::string format_summary(const SplitSummary& s) {
  std::ostringstream os;
  os << "split";
  for (const char* src : kSourceNames) os << ',' << src << "_accident," << src << "_normal," << src << "_total";
  os << ",total\n";
  for (std::size_t sp = 0; sp < 3; ++sp) {
    const auto split = static_cast<Split>(sp);
    os << kSplitNames[sp];
    for (std::size_t src = 0; src < 3; ++src) {
      const auto source = static_cast<Source>(src);
      os << ',' << s.count(split, source, Label::accident) << ',' << s.count(split, source, Label::normal) << ','
         << s.source_total(split, source);
    }
    os << ',' << s.total(split) << '\n';
  }
  return os.str();
}

}  // namespace accdet
