// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "accdet/video/pipeline.hpp"

namespace accdet {

namespace fs = std::filesystem;

inline constexpr const char* kClipMetaFile = "meta.txt";

inline std::string frame_file_name(std::size_t index_from_one) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06zu.ppm", index_from_one);
  return buf;
}

// Binary P6 PPM with maxval 255 -> H x W x 3 integer pixels.
inline Tensor<std::uint8_t> read_ppm(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open frame " + path.string());
  auto token = [&]() {
    std::string t;
    int ch;
    while ((ch = f.get()) != EOF) {
      if (ch == '#') {
        while ((ch = f.get()) != EOF && ch != '\n') {
        }
        continue;
      }
      if (std::isspace(ch)) {
        if (!t.empty()) break;
        continue;
      }
      t.push_back(static_cast<char>(ch));
    }
    return t;
  };
  auto number = [&](const char* what) {
    const std::string t = token();
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || v == 0) {
      throw DataError(path.string() + ": bad PPM " + what + " '" + t + "'");
    }
    return v;
  };
  if (token() != "P6") throw DataError(path.string() + ": not a binary P6 PPM");
  const std::size_t w = number("width"), h = number("height"), maxval = number("maxval");
  if (maxval != 255) throw DataError(path.string() + ": PPM maxval must be 255");
  Tensor<std::uint8_t> img({h, w, 3});
  f.read(reinterpret_cast<char*>(img.data()), static_cast<std::streamsize>(img.size()));
  if (f.gcount() != static_cast<std::streamsize>(img.size())) throw DataError(path.string() + ": truncated PPM");
  return img;
}

inline void write_ppm(const fs::path& path, const Tensor<std::uint8_t>& img) {
  if (img.rank() != 3 || img.dim(2) != 3) throw ShapeError("write_ppm expects H x W x 3");
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f << "P6\n" << img.dim(1) << ' ' << img.dim(0) << "\n255\n";
  f.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
}

// [0, 1] floats -> 8-bit pixels with rounding.
inline Tensor<std::uint8_t> quantize(const Tensor<float>& frame) {
  Tensor<std::uint8_t> out(frame.dims());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const float v = std::clamp(frame[i], 0.0f, 1.0f);
    out[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
  }
  return out;
}

inline double read_fps(const fs::path& clip_dir) {
  std::ifstream f(clip_dir / kClipMetaFile);
  if (!f) throw DataError("missing " + (clip_dir / kClipMetaFile).string());
  std::string line;
  while (std::getline(f, line)) {
    if (line.rfind("fps=", 0) == 0) {
      try {
        std::size_t used = 0;
        const double fps = std::stod(line.substr(4), &used);
        if (used != line.size() - 4 || !(fps > 0.0) || !std::isfinite(fps)) throw std::invalid_argument("");
        return fps;
      } catch (const std::exception&) {
        throw DataError(clip_dir.string() + ": bad fps metadata '" + line + "'");
      }
    }
  }
  throw DataError(clip_dir.string() + ": no fps= line in metadata");
}

inline void write_fps(const fs::path& clip_dir, double fps) {
  std::ofstream f(clip_dir / kClipMetaFile, std::ios::trunc);
  if (!f) throw DataError("cannot write metadata in " + clip_dir.string());
  f << "fps=" << fps << '\n';
}

inline std::size_t count_frames(const fs::path& clip_dir) {
  std::size_t n = 0;
  while (fs::exists(clip_dir / frame_file_name(n + 1))) ++n;
  return n;
}

// Loads frame_000001.ppm onward plus fps metadata, normalized to [0, 1].
inline FrameSequence read_frame_dir(const fs::path& clip_dir, const std::string& source_id = {}) {
  if (!fs::is_directory(clip_dir)) throw DataError("not a frame directory: " + clip_dir.string());
  FrameSequence seq;
  seq.fps = read_fps(clip_dir);
  seq.source_id = source_id.empty() ? clip_dir.filename().string() : source_id;
  const std::size_t n = count_frames(clip_dir);
  if (n == 0) throw DataError("no frames in " + clip_dir.string());
  seq.frames.reserve(n);
  for (std::size_t i = 1; i <= n; ++i) seq.frames.push_back(normalize(read_ppm(clip_dir / frame_file_name(i))));
  seq.validate();
  return seq;
}

inline void write_frame_dir(const fs::path& clip_dir, const FrameSequence& seq) {
  fs::create_directories(clip_dir);
  for (std::size_t i = 0; i < seq.size(); ++i) write_ppm(clip_dir / frame_file_name(i + 1), quantize(seq.frames[i]));
  write_fps(clip_dir, seq.fps);
}

// Lazily yields frames of a directory in order, one at a time.
class FrameDirReader {
 public:
  explicit FrameDirReader(fs::path dir) : dir_(std::move(dir)) {
    if (!fs::is_directory(dir_)) throw DataError("not a frame directory: " + dir_.string());
    fps_ = read_fps(dir_);
  }
  double fps() const { return fps_; }
  std::optional<Tensor<float>> next() {
    const auto path = dir_ / frame_file_name(next_ + 1);
    if (!fs::exists(path)) return std::nullopt;
    ++next_;
    return normalize(read_ppm(path));
  }

 private:
  fs::path dir_;
  double fps_ = 0.0;
  std::size_t next_ = 0;
};

}  // namespace accdet
