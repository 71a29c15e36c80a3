// Copyright 2026 The accdet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "accdet/core/activation.hpp"
#include "accdet/core/conv.hpp"
#include "accdet/core/random.hpp"

namespace accdet {

// Gate order used wherever the four gates are packed together.
enum Gate : std::size_t { kForget = 0, kInput = 1, kOutput = 2, kCandidate = 3 };
inline constexpr std::array<const char*, 4> kGateNames{"f", "i", "o", "c"};

// Input kernels W (Kh x Kw x Cin x F), recurrent kernels U (Kh x Kw x F x F)
// and biases b (F) for the forget, input, output and candidate transforms.
template <class T>
struct ConvLstmWeights {
  std::array<Parameter<T>, 4> W;
  std::array<Parameter<T>, 4> U;
  std::array<Parameter<T>, 4> b;

  ConvLstmWeights() = default;

  // All-zero weights.
  ConvLstmWeights(std::size_t kernel, std::size_t in_channels, std::size_t filters) {
    for (std::size_t g = 0; g < 4; ++g) {
      W[g] = Parameter<T>(Tensor<T>({kernel, kernel, in_channels, filters}));
      U[g] = Parameter<T>(Tensor<T>({kernel, kernel, filters, filters}));
      b[g] = Parameter<T>(Tensor<T>({filters}));
    }
  }

  static ConvLstmWeights random(std::size_t kernel, std::size_t in_channels, std::size_t filters, Rng& rng) {
    ConvLstmWeights w(kernel, in_channels, filters);
    for (std::size_t g = 0; g < 4; ++g) {
      w.W[g].value = lecun_uniform<T>(w.W[g].dims(), kernel * kernel * in_channels, rng);
      w.U[g].value = lecun_uniform<T>(w.U[g].dims(), kernel * kernel * filters, rng);
    }
    w.b[kForget].value.fill(T{1});
    return w;
  }

  std::size_t kernel() const { return W[0].value.dim(0); }
  std::size_t in_channels() const { return W[0].value.dim(2); }
  std::size_t filters() const { return W[0].value.dim(3); }

  void validate() const {
    const auto& wd = W[0].dims();
    const auto& ud = U[0].dims();
    for (std::size_t g = 0; g < 4; ++g) {
      if (W[g].dims() != wd || U[g].dims() != ud || b[g].size() != wd[3]) {
        throw ShapeError("ConvLSTM gate weights must share extents");
      }
    }
    if (wd.size() != 4 || ud.size() != 4 || ud[2] != wd[3] || ud[3] != wd[3] || ud[0] != wd[0] || ud[1] != wd[1]) {
      throw ShapeError("ConvLSTM recurrent kernels must be Kh x Kw x F x F");
    }
  }

  void set_trainable(bool on) {
    for (std::size_t g = 0; g < 4; ++g) W[g].trainable = U[g].trainable = b[g].trainable = on;
  }

  std::vector<NamedParameter<T>> named_parameters(const std::string& prefix) {
    std::vector<NamedParameter<T>> out;
    for (std::size_t g = 0; g < 4; ++g) out.push_back({prefix + "W_" + kGateNames[g], &W[g]});
    for (std::size_t g = 0; g < 4; ++g) out.push_back({prefix + "U_" + kGateNames[g], &U[g]});
    for (std::size_t g = 0; g < 4; ++g) out.push_back({prefix + "b_" + kGateNames[g], &b[g]});
    return out;
  }

  // Kh x Kw x Cin x 4F kernel with gates packed along the last axis.
  Tensor<T> packed_input_kernel() const { return pack(W); }
  Tensor<T> packed_recurrent_kernel() const { return pack(U); }

  static void unpack_into(const Tensor<T>& packed, std::array<Parameter<T>, 4>& params) {
    const std::size_t F = params[0].dims().back();
    const std::size_t rows = params[0].size() / F;
    for (std::size_t g = 0; g < 4; ++g) {
      if (!params[g].trainable) continue;
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t f = 0; f < F; ++f) params[g].grad[r * F + f] += packed[r * 4 * F + g * F + f];
      }
    }
  }

 private:
  static Tensor<T> pack(const std::array<Parameter<T>, 4>& params) {
    Shape d = params[0].dims();
    const std::size_t F = d.back(), rows = params[0].size() / F;
    d.back() = 4 * F;
    Tensor<T> out(d);
    for (std::size_t g = 0; g < 4; ++g) {
      for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(params[g].value.data() + r * F, F, out.data() + r * 4 * F + g * F);
      }
    }
    return out;
  }
};

template <class T>
struct ConvLstmState {
  Tensor<T> cell;    // C_t, H x W x F
  Tensor<T> hidden;  // H_t, H x W x F

  static ConvLstmState zeros(std::size_t h, std::size_t w, std::size_t filters) {
    return {Tensor<T>({h, w, filters}), Tensor<T>({h, w, filters})};
  }
};

namespace detail {

// Packed pre-activations (H x W x 4F) -> gate activations in place, then the
// cell and hidden updates.
template <class T>
void lstm_pointwise(Tensor<T>& z, const Tensor<T>& prev_cell, Tensor<T>& cell, Tensor<T>& tanh_cell,
                    Tensor<T>& hidden) {
  const std::size_t F = prev_cell.dims().back(), positions = prev_cell.size() / F;
  for (std::size_t p = 0; p < positions; ++p) {
    T* g = z.data() + p * 4 * F;
    for (std::size_t f = 0; f < F; ++f) {
      const T fg = sigmoid(g[kForget * F + f]);
      const T ig = sigmoid(g[kInput * F + f]);
      const T og = sigmoid(g[kOutput * F + f]);
      const T cg = std::tanh(g[kCandidate * F + f]);
      g[kForget * F + f] = fg;
      g[kInput * F + f] = ig;
      g[kOutput * F + f] = og;
      g[kCandidate * F + f] = cg;
      const std::size_t i = p * F + f;
      const T c = fg * prev_cell[i] + ig * cg;
      const T tc = std::tanh(c);
      cell[i] = c;
      tanh_cell[i] = tc;
      hidden[i] = og * tc;
    }
  }
}

template <class T>
void add_packed_bias(Tensor<T>& z, const std::array<Parameter<T>, 4>& b) {
  const std::size_t F = b[0].size();
  for (std::size_t p = 0; p < z.size(); p += 4 * F) {
    for (std::size_t g = 0; g < 4; ++g) {
      for (std::size_t f = 0; f < F; ++f) z[p + g * F + f] += b[g].value[f];
    }
  }
}

}  // namespace detail

// One ConvLSTM2D step:
//   F = sig(W_f*X + U_f*H + b_f), I = sig(W_i*X + U_i*H + b_i), O = sig(W_o*X + U_o*H + b_o)
//   C' = F . C + I . tanh(W_c*X + U_c*H + b_c),  H' = O . tanh(C')
// with "same"-padded 2-D convolutions and . the elementwise product.
template <class T>
ConvLstmState<T> convlstm_step(const Tensor<T>& x, const ConvLstmState<T>& state, const ConvLstmWeights<T>& w) {
  w.validate();
  if (x.rank() != 3 || x.dim(2) != w.in_channels()) {
    throw ShapeError("convlstm_step: input must be H x W x " + std::to_string(w.in_channels()));
  }
  const Shape sdims{x.dim(0), x.dim(1), w.filters()};
  if (state.cell.dims() != sdims || state.hidden.dims() != sdims) {
    throw ShapeError("convlstm_step: state extents " + shape_string(state.cell.dims()) + " do not match " +
                     shape_string(sdims));
  }
  auto z = conv2d(x, w.packed_input_kernel(), 1, Padding::same);
  add_into(z, conv2d(state.hidden, w.packed_recurrent_kernel(), 1, Padding::same));
  detail::add_packed_bias(z, w.b);
  ConvLstmState<T> next{Tensor<T>(sdims), Tensor<T>(sdims)};
  Tensor<T> tc(sdims);
  detail::lstm_pointwise(z, state.cell, next.cell, tc, next.hidden);
  return next;
}

// Stacked-layer form with caching for backpropagation through time.
template <class T>
class ConvLstmLayer {
 public:
  struct Cache {
    Tensor<T> input;                   // T x H x W x Cin
    std::vector<Tensor<T>> gates;      // per step, H x W x 4F activations
    std::vector<Tensor<T>> cells;      // C_1..C_T
    std::vector<Tensor<T>> tanh_cells;
    std::vector<Tensor<T>> hiddens;    // H_1..H_T
  };

  ConvLstmLayer() = default;
  ConvLstmLayer(ConvLstmWeights<T> weights, bool return_sequences)
      : weights_(std::move(weights)), return_sequences_(return_sequences) {
    weights_.validate();
  }

  ConvLstmWeights<T>& weights() { return weights_; }
  const ConvLstmWeights<T>& weights() const { return weights_; }
  bool return_sequences() const { return return_sequences_; }
  std::size_t filters() const { return weights_.filters(); }

  // xs: T x H x W x Cin. Returns T x H x W x F, or H x W x F (H_T only).
  Tensor<T> forward(const Tensor<T>& xs, Cache* cache = nullptr) const {
    if (xs.rank() != 4 || xs.dim(3) != weights_.in_channels()) {
      throw ShapeError("ConvLSTM input must be T x H x W x " + std::to_string(weights_.in_channels()) + ", got " +
                       shape_string(xs.dims()));
    }
    const std::size_t steps = xs.dim(0), H = xs.dim(1), W = xs.dim(2), F = filters();
    const std::size_t k = weights_.kernel();
    const Tensor<T> wx = weights_.packed_input_kernel().reshaped({1, k, k, weights_.in_channels(), 4 * F});
    const Tensor<T> wh = weights_.packed_recurrent_kernel();
    // Input projections for every step in one pass.
    Tensor<T> zx = conv3d(xs, wx, Extent3{1, 1, 1}, Padding::same);
    const Shape sdims{H, W, F};
    Tensor<T> cell(sdims), hidden(sdims);
    Tensor<T> seq;
    if (return_sequences_) seq = Tensor<T>({steps, H, W, F});
    if (cache) {
      cache->input = xs;
      cache->gates.clear();
      cache->cells.clear();
      cache->tanh_cells.clear();
      cache->hiddens.clear();
    }
    const std::size_t plane = H * W * 4 * F;
    for (std::size_t t = 0; t < steps; ++t) {
      Tensor<T> z({H, W, 4 * F}, std::vector<T>(zx.data() + t * plane, zx.data() + (t + 1) * plane));
      if (t > 0) add_into(z, conv2d(hidden, wh, 1, Padding::same));
      detail::add_packed_bias(z, weights_.b);
      Tensor<T> next_cell(sdims), tanh_cell(sdims), next_hidden(sdims);
      detail::lstm_pointwise(z, cell, next_cell, tanh_cell, next_hidden);
      cell = std::move(next_cell);
      hidden = std::move(next_hidden);
      if (return_sequences_) std::copy_n(hidden.data(), hidden.size(), seq.data() + t * hidden.size());
      if (cache) {
        cache->gates.push_back(std::move(z));
        cache->cells.push_back(cell);
        cache->tanh_cells.push_back(std::move(tanh_cell));
        cache->hiddens.push_back(hidden);
      }
    }
    return return_sequences_ ? seq : hidden;
  }

  // grad_out matches forward's output. Accumulates weight gradients and
  // returns dL/dxs when requested.
  Tensor<T> backward(const Cache& cache, const Tensor<T>& grad_out, bool need_input_grad = true) {
    const std::size_t steps = cache.input.dim(0), H = cache.input.dim(1), W = cache.input.dim(2);
    const std::size_t F = filters(), k = weights_.kernel(), n = H * W * F;
    const Shape sdims{H, W, F};
    if (return_sequences_ ? grad_out.dims() != Shape{steps, H, W, F} : grad_out.dims() != sdims) {
      throw ShapeError("ConvLSTM backward: gradient extent mismatch");
    }
    const Tensor<T> wx = weights_.packed_input_kernel().reshaped({1, k, k, weights_.in_channels(), 4 * F});
    const Tensor<T> wh = weights_.packed_recurrent_kernel();
    Tensor<T> dwh(wh.dims());
    Tensor<T> dz_all({steps, H, W, 4 * F});
    Tensor<T> dh_next(sdims), dc_next(sdims);
    const bool any_trainable = weights_.U[0].trainable || weights_.U[1].trainable || weights_.U[2].trainable ||
                               weights_.U[3].trainable;
    for (std::size_t t = steps; t-- > 0;) {
      const T* g = cache.gates[t].data();
      const T* tc = cache.tanh_cells[t].data();
      const T* c_prev = t > 0 ? cache.cells[t - 1].data() : nullptr;
      T* dz = dz_all.data() + t * H * W * 4 * F;
      for (std::size_t p = 0; p < H * W; ++p) {
        for (std::size_t f = 0; f < F; ++f) {
          const std::size_t i = p * F + f, gi = p * 4 * F;
          T dh = dh_next[i];
          if (return_sequences_) {
            dh += grad_out[t * n + i];
          } else if (t + 1 == steps) {
            dh += grad_out[i];
          }
          const T fg = g[gi + kForget * F + f], ig = g[gi + kInput * F + f];
          const T og = g[gi + kOutput * F + f], cg = g[gi + kCandidate * F + f];
          const T dc = dc_next[i] + dh * og * (T{1} - tc[i] * tc[i]);
          const T cp = c_prev ? c_prev[i] : T{0};
          dz[gi + kForget * F + f] = dc * cp * fg * (T{1} - fg);
          dz[gi + kInput * F + f] = dc * cg * ig * (T{1} - ig);
          dz[gi + kOutput * F + f] = dh * tc[i] * og * (T{1} - og);
          dz[gi + kCandidate * F + f] = dc * ig * (T{1} - cg * cg);
          dc_next[i] = dc * fg;
        }
      }
      for (std::size_t gate = 0; gate < 4; ++gate) {
        auto& b = weights_.b[gate];
        if (!b.trainable) continue;
        for (std::size_t p = 0; p < H * W; ++p) {
          for (std::size_t f = 0; f < F; ++f) b.grad[f] += dz[p * 4 * F + gate * F + f];
        }
      }
      if (t > 0) {
        Tensor<T> dz_t({H, W, 4 * F}, std::vector<T>(dz, dz + H * W * 4 * F));
        dh_next = conv2d_backward(cache.hiddens[t - 1], wh, dz_t, 1, Padding::same,
                                  any_trainable ? &dwh : nullptr, true);
      }
    }
    ConvLstmWeights<T>::unpack_into(dwh, weights_.U);
    const bool w_trainable = weights_.W[0].trainable || weights_.W[1].trainable || weights_.W[2].trainable ||
                             weights_.W[3].trainable;
    Tensor<T> dwx;
    if (w_trainable) dwx = Tensor<T>(wx.dims());
    auto dx = conv3d_backward(cache.input, wx, dz_all, Extent3{1, 1, 1}, Padding::same,
                              w_trainable ? &dwx : nullptr, need_input_grad);
    if (w_trainable) ConvLstmWeights<T>::unpack_into(dwx, weights_.W);
    return dx;
  }

 private:
  ConvLstmWeights<T> weights_;
  bool return_sequences_ = true;
};

// Runs the recurrence from a zero state and returns H_t for every step.
template <class T>
Tensor<T> convlstm_sequence(const Tensor<T>& xs, const ConvLstmWeights<T>& weights) {
  return ConvLstmLayer<T>(weights, true).forward(xs);
}

}  // namespace accdet
