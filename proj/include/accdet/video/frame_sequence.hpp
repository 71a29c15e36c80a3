// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "accdet/core/tensor.hpp"

namespace accdet {

// Ordered RGB clip. Frames are H x W x 3 and share extents.
struct FrameSequence {
  std::vector<Tensor<float>> frames;
  double fps = 0.0;
  std::string source_id;

  std::size_t size() const noexcept { return frames.size(); }
  bool empty() const noexcept { return frames.empty(); }
  std::size_t height() const { return frames.at(0).dim(0); }
  std::size_t width() const { return frames.at(0).dim(1); }

  void validate() const {
    if (!(fps > 0.0)) throw ShapeError("frame sequence fps must be > 0");
    for (const auto& f : frames) {
      if (f.rank() != 3 || f.dim(2) != 3) throw ShapeError("frames must be H x W x 3");
      if (f.dims() != frames.front().dims()) throw ShapeError("frames do not share extents");
    }
  }

  // T x H x W x 3 stack of all frames.
  Tensor<float> to_tensor() const {
    return stack(std::span<const Tensor<float>>(frames));
  }
};

}  // namespace accdet
