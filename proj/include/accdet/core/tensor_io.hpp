// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "accdet/core/tensor.hpp"

namespace accdet {

// Portable tensor file: "TNSR", version 0x01, u32 rank, rank x u32 extents,
// then float32 elements, all little-endian, row-major.
inline constexpr std::array<char, 4> kTensorMagic{'T', 'N', 'S', 'R'};
inline constexpr std::uint8_t kTensorVersion = 0x01;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

template <class T>
std::string encode_tensor(const Tensor<T>& t) {
  if (t.empty()) throw ShapeError("cannot encode an empty tensor");
  std::string out(kTensorMagic.begin(), kTensorMagic.end());
  out.push_back(static_cast<char>(kTensorVersion));
  detail::put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (auto d : t.dims()) detail::put_u32(out, static_cast<std::uint32_t>(d));
  out.reserve(out.size() + 4 * t.size());
  for (auto v : t.values()) detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

template <class T = float>
Tensor<T> decode_tensor(std::string_view bytes) {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 9 || std::memcmp(p, kTensorMagic.data(), 4) != 0) {
    throw DataError("not a TNSR tensor file");
  }
  if (p[4] != kTensorVersion) throw DataError("unsupported TNSR version " + std::to_string(p[4]));
  const std::uint32_t rank = detail::get_u32(p + 5);
  std::size_t off = 9;
  if (rank == 0 || bytes.size() < off + 4ull * rank) throw DataError("truncated TNSR header");
  Shape dims(rank);
  for (auto& d : dims) {
    d = detail::get_u32(p + off);
    off += 4;
    if (d == 0) throw DataError("TNSR extent of zero");
  }
  const std::size_t n = shape_size(dims);
  if (bytes.size() != off + 4 * n) throw DataError("TNSR payload length mismatch");
  Tensor<T> t(dims);
  for (std::size_t i = 0; i < n; ++i, off += 4) {
    t[i] = static_cast<T>(std::bit_cast<float>(detail::get_u32(p + off)));
  }
  return t;
}

template <class T>
void save_tensor(const std::filesystem::path& path, const Tensor<T>& t) {
  const auto bytes = encode_tensor(t);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw DataError("short write to " + path.string());
}

template <class T = float>
Tensor<T> load_tensor(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  try {
    return decode_tensor<T>(ss.str());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

inline constexpr const char* kIndexFile = "index.txt";

// Writes one TNSR file per named tensor plus "index.txt" with "<name> <file>" lines.
template <class T>
void save_tensor_set(const std::filesystem::path& dir, const std::map<std::string, const Tensor<T>*>& tensors) {
  std::filesystem::create_directories(dir);
  std::ofstream index(dir / kIndexFile, std::ios::trunc);
  if (!index) throw DataError("cannot write index in " + dir.string());
  for (const auto& [name, tensor] : tensors) {
    const std::string file = name + ".tnsr";
    save_tensor(dir / file, *tensor);
    index << name << ' ' << file << '\n';
  }
}

template <class T = float>
std::map<std::string, Tensor<T>> load_tensor_set(const std::filesystem::path& dir) {
  std::ifstream index(dir / kIndexFile);
  if (!index) throw DataError("missing " + (dir / kIndexFile).string());
  std::map<std::string, Tensor<T>> out;
  std::string line;
  while (std::getline(index, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string name, file;
    if (!(ls >> name >> file)) throw DataError("malformed index line: " + line);
    out.emplace(name, load_tensor<T>(dir / file));
  }
  return out;
}

}  // namespace accdet
