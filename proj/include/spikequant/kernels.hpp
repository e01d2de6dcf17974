/* Copyright 2026 The SpikeQuant Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <cstdint>
#include <vector>

#include "spikequant/neuron.hpp"
#include "spikequant/quant.hpp"
#include "spikequant/tensor.hpp"

namespace spikequant {

/// Bit-plane packed code matrix: plane i holds bit i of every code, 64
/// columns per word, LSB-first within a word. Padding bits past cols are
/// zero, so word-wise AND+popcount never picks up garbage.
struct BitPlanes {
    std::size_t rows = 0;
    std::size_t cols = 0;
    int bits = 0;
    std::size_t words_per_row = 0;
    std::vector<std::uint64_t> words;  // [bit][row][word]

    const std::uint64_t* plane_row(int bit, std::size_t r) const {
        return words.data() + (static_cast<std::size_t>(bit) * rows + r) * words_per_row;
    }
    std::uint64_t* plane_row(int bit, std::size_t r) {
        return words.data() + (static_cast<std::size_t>(bit) * rows + r) * words_per_row;
    }
};

struct GemmResult {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::int64_t> ints;  // integer backends
    std::vector<double> reals;       // real backends
    std::uint64_t accumulated_events = 0;

    std::int64_t int_at(std::size_t r, std::size_t c) const { return ints[r * cols + c]; }
    double real_at(std::size_t r, std::size_t c) const { return reals[r * cols + c]; }
};

/// Codes must lie in [0, 2^bits - 1]; throws std::out_of_range otherwise.
BitPlanes pack_bitplanes(const IntMat& codes, int bits);
IntMat unpack_bitplanes(const BitPlanes& bp);

/// result[t, o] = sum_k a_codes[t, k] * w_codes[o, k], computed plane-pair
/// wise as sum_{i,j} 2^(i+j) popcount(AND(a_i, w_j)). Exact integer GEMM
/// of the codes; 64-bit accumulators (safe for <=8-bit codes and inner
/// dims up to 2^20).
GemmResult bitserial_gemm(const BitPlanes& a, const BitPlanes& w);

enum class MixedGemmBackend { Naive, BitSerial };

/// Mixed-step spiking GEMM: salient channels contribute T' per-step rows
/// (each code <= L-1) against duplicated weight columns, forming a single
/// uniform-precision integer GEMM; the per-token affine correction
///   Y[t,:] = delta_sal[t]*(n_sal W_sal^T) + delta_base[t]*(n_base W_base^T)
///            + zero[t]*(W 1)
/// is applied outside the integer part. wq must be symmetric per-group.
/// Returns tokens x out reals equal to the float GEMM of the dequantized
/// operands (1e-6 relative).
Tensor2D mixed_step_gemm(const SpikeTrain& x, const QuantizedTensor& wq,
                         const ChannelPlan& plan,
                         MixedGemmBackend backend = MixedGemmBackend::Naive);

/// Event-driven accumulate-only GEMM over an expanded-binary train: every
/// nonzero spike adds the weight row of its channel into a per-class
/// accumulator; zero spikes perform no work. w is out x channels, real
/// (dequantized) weights. accumulated_events = nonzero spikes x out.
GemmResult event_driven_gemm(const SpikeTrain& x, const Tensor2D& w,
                             const ChannelPlan& plan);

/// All-salient variant for uniform trains.
GemmResult event_driven_gemm(const SpikeTrain& x, const Tensor2D& w);

/// Event-driven path for expanded-ternary weight trains: result[o, j] =
/// sum over spikes sign * delta[o, c] * x[c, j], accumulated per step-class
/// so scales multiply once per class. deltas is tokens(out) x channels(in).
GemmResult event_driven_gemm_ternary(const SpikeTrain& w_train,
                                     const Tensor2D& deltas, const Tensor2D& x);

/// Naive triple-loop real GEMM, k-innermost fixed accumulation order.
Tensor2D reference_gemm(const Tensor2D& a, const Tensor2D& b);

}  // namespace spikequant
