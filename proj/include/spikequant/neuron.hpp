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
#include <span>
#include <vector>

#include "spikequant/tensor.hpp"

namespace spikequant {

/// Per-token parameters of a spiking encoder.
///
/// A token spanning [min, max] with T merged steps of L levels each uses
///   step_delta = (max - min) / (T * (L - 1))   value of one spike unit
///   v_th_unit  = step_delta * T                firing unit per merged step
/// The maximum element always reaches the full-scale code (no clipping).
struct TokenQuantParams {
    double v_th_unit = 0.0;
    double zero_point = 0.0;
    double step_delta = 0.0;
    int levels_per_step = 2;
    int steps = 1;
};

enum class SpikeForm { Merged, ExpandedBinary, ExpandedTernary };

/// Spike codes laid out (token, channel, step) row-major.
/// Merged form holds per-step codes in [0, L-1]; expanded-binary holds
/// {0,1}; expanded-ternary holds {-1,0,+1}. The per-(token,channel) code
/// sum is invariant under merge/expand conversion.
struct SpikeTrain {
    std::size_t tokens = 0;
    std::size_t channels = 0;
    std::size_t steps = 0;
    SpikeForm form = SpikeForm::Merged;
    std::vector<std::int32_t> codes;
    std::vector<TokenQuantParams> params;  // one per token

    std::int32_t& code(std::size_t t, std::size_t c, std::size_t s) {
        return codes[(t * channels + c) * steps + s];
    }
    std::int32_t code(std::size_t t, std::size_t c, std::size_t s) const {
        return codes[(t * channels + c) * steps + s];
    }
    std::int64_t code_sum(std::size_t t, std::size_t c) const;
};

/// min/max scan of one token; degenerate (constant) tokens get all-zero
/// thresholds so that encode emits no spikes and decode returns zero_point.
TokenQuantParams compute_token_params(std::span<const double> token, int steps,
                                      int levels);

/// Fires one shifted input through the merged-step membrane recurrence:
/// v accumulates the input each step, emits k = min(L-1, floor(v/theta + eps))
/// and subtracts k*theta, with a dimensionless eps = 1e-9 boundary guard.
void gif_fire(double shifted, const TokenQuantParams& p, std::int32_t* out_codes);

/// Encode tokens x channels activations into a merged spike train with
/// per-token thresholds. The per-(token,channel) code total always equals
/// clip(floor((x - min)/delta + eps), 0, steps*(L-1)).
SpikeTrain gif_encode(const Tensor2D& x, int steps, int levels);

/// delta * sum(codes) + zero_point per (token, channel). Valid for merged
/// and expanded-binary forms (the unit value of a spike is unchanged by
/// expansion).
Tensor2D gif_decode(const SpikeTrain& s);

/// Merged -> expanded-binary: a step of value k becomes L-1 binary sub-steps
/// with k ones packed into the earliest slots.
SpikeTrain expand_train(const SpikeTrain& merged);

/// Expanded-binary -> merged: sums each group of (levels-1) sub-steps.
/// Inverse of expand_train on codes.
SpikeTrain merge_train(const SpikeTrain& binary, int levels);

/// Ternary spike encoding of one weight group.
struct TernaryEncoding {
    SpikeTrain train;            // expanded-ternary, 1 x n x max_steps
    std::vector<double> deltas;  // per element: group_absmax / steps[i]
};

/// Signed round-to-nearest onto the per-element grid group_absmax/steps[i];
/// |n| spikes of sign(n) packed into the earliest slots. steps must be
/// 1, 2, or 4 per element.
TernaryEncoding ternary_encode(std::span<const double> weights,
                               std::span<const int> steps_per_element,
                               double group_absmax);

/// delta[i] * signed code sum per element.
std::vector<double> ternary_decode(const TernaryEncoding& enc);

}  // namespace spikequant
