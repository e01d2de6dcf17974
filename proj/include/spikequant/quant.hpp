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
#include "spikequant/tensor.hpp"

namespace spikequant {

enum class RoundingMode { Floor, Nearest };
enum class QuantGranularity { PerToken, PerChannel, PerGroup };
enum class PlanGranularity { Structured, Unstructured };

/// Codes plus affine parameters. Asymmetric: x ~ scale*code + zero_point,
/// codes in [0, levels-1]. Symmetric (per-group weights): x ~ scale*code,
/// signed codes in [-(2^(b-1)-1), 2^(b-1)-1].
struct QuantizedTensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    IntMat codes;
    QuantGranularity granularity = QuantGranularity::PerToken;
    bool symmetric = false;
    int bits = 0;
    long levels = 0;
    std::size_t group_size = 0;          // PerGroup only
    std::vector<double> scale;           // per row, per col, or rows x ngroups
    std::vector<double> zero_point;      // empty when symmetric

    std::size_t num_groups() const {
        return group_size ? (cols + group_size - 1) / group_size : 0;
    }
};

/// Asymmetric uniform quantizer: Delta = (max-min)/(levels-1) per token row
/// (or channel column), codes clipped to [0, levels-1]. Floor mode carries
/// the same 1e-9-of-range epsilon guard as the spiking encoder so the two
/// paths agree exactly.
QuantizedTensor uniform_quantize_levels(const Tensor2D& x, long levels,
                                        QuantGranularity mode,
                                        RoundingMode rounding);

/// 2^bits levels, bits in [1, 8].
QuantizedTensor uniform_quantize(const Tensor2D& x, int bits,
                                 QuantGranularity mode, RoundingMode rounding);

/// Symmetric per-(row, group) weight quantizer: scale = absmax/(2^(b-1)-1),
/// nearest rounding. Used by the integer matmul backends.
QuantizedTensor group_quantize_symmetric(const Tensor2D& w, int bits,
                                         std::size_t group_size);

Tensor2D dequantize(const QuantizedTensor& q);

/// Channel-step allocation: channels in salient_set are encoded with
/// salient_steps merged steps, all others with base_steps (= 1).
struct ChannelPlan {
    std::size_t channels = 0;
    int salient_steps = 1;  // T' for the salient set
    int base_steps = 1;
    int levels = 2;         // L per merged step
    std::vector<std::size_t> salient_set;  // unique, ascending
    PlanGranularity granularity = PlanGranularity::Structured;
    IntMat element_steps;   // unstructured weight plans only

    double salient_ratio() const {
        return channels ? static_cast<double>(salient_set.size()) /
                              static_cast<double>(channels)
                        : 0.0;
    }
    std::vector<bool> salient_mask() const;
    void validate() const;
};

/// Mixed-step encoder. All channels of a token share zero_point = min and
/// the token range; salient channels fire T' merged steps with
/// delta_salient = range/(T'(L-1)), base channels fire one step with
/// delta_base = range/(L-1) (= v_th_unit). With an empty salient set this
/// is exactly the uniform floor quantizer at L levels.
SpikeTrain mixed_step_quantize(const Tensor2D& x, const ChannelPlan& plan);

/// Per-channel class delta times code sum, plus the token zero point.
Tensor2D mixed_step_dequantize(const SpikeTrain& s, const ChannelPlan& plan);

}  // namespace spikequant
