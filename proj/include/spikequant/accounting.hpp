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

#include "spikequant/neuron.hpp"
#include "spikequant/quant.hpp"

namespace spikequant {

/// Operation-cost metrics. ace always equals macs * bits_weight * bits_act;
/// sparse_ace is evaluated on the expanded 1-bit form.
struct OpsReport {
    std::uint64_t macs = 0;
    double bits_weight = 0.0;
    double bits_act = 0.0;
    double ace = 0.0;
    double ace_ratio_vs_fp16 = 0.0;
    double sparse_ace = 0.0;
    double sparsity = 0.0;      // nonzero spike fraction of the expanded form
    double equal_steps = 0.0;   // average spiking steps per element
    double code_bits_total = 0.0;
};

/// Binary-operation count of a quantized GEMM: macs * bw * ba.
double ace(std::uint64_t macs, double bw, double ba);

/// Cost ratio of a mixed-step plan against an fp baseline. The planned side
/// averages bits_per_step * (1 + ratio*(T'-1)) bits; the ratio is
/// avg_bits * other_side_bits / fp_bits^2.
double mixed_ace_ratio(const ChannelPlan& plan, double bits_per_step,
                       double other_side_bits, double fp_bits);

/// Fraction of nonzero spikes in an expanded train.
double train_sparsity(const SpikeTrain& expanded);

/// sparsity x (expanded MACs x weight_bits x 1) = nonzero spikes x
/// output_width x weight_bits. Requires an expanded form.
double sparse_ace(const SpikeTrain& expanded, double weight_bits,
                  std::size_t output_width);

/// Average spiking steps sum f_i * steps_i; fractions must sum to 1
/// within 1e-9.
double equal_steps(std::span<const double> fractions, std::span<const int> steps);

enum class CodeScheme { If, Gif, Quant, Mixed };

/// Code length in bits for T total quantization levels:
///   if    -> T
///   gif   -> (T/L) * log2(L)
///   quant -> log2(T)
///   mixed -> log2(L) * (1 + ratio*(T' - 1)) with T' = T/L
double code_length(CodeScheme scheme, double T, double L, double ratio);

}  // namespace spikequant
