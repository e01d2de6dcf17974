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

#include <array>
#include <cstdint>
#include <vector>

#include "spikequant/accounting.hpp"
#include "spikequant/quant.hpp"
#include "spikequant/saliency.hpp"
#include "spikequant/tensor.hpp"

namespace spikequant {

/// Synthetic calibration data: Gaussian base with a random fraction of
/// channels scaled up, emulating outlier-heavy activations.
struct SyntheticSpec {
    std::size_t tokens = 512;
    std::size_t channels = 256;
    double outlier_ratio = 0.1;
    double outlier_scale = 10.0;
    std::uint64_t seed = 2;
};

struct PipelineResult {
    double layerwise_error = 0.0;  // squared Frobenius
    OpsReport ops;
    ChannelPlan plan;
    SaliencyReport saliency;
};

enum class Selector { ObSpiking, Random };
enum class WeightMethod { Rtn, Gptq };

/// The outlier channel subset drawn for a spec (first draws of the seed).
std::vector<std::size_t> synth_outlier_channels(const SyntheticSpec& spec);

/// tokens x channels activations; outlier channels scaled by outlier_scale.
Tensor2D synth_activations(const SyntheticSpec& spec);

/// out_rows x channels Gaussian weights whose columns at the outlier
/// channels are scaled by outlier_scale. Real networks show exactly this
/// coupling between wide activation channels and heavy weight columns;
/// without it, channel choice would not move the layerwise error.
Tensor2D synth_weights(const SyntheticSpec& spec, std::size_t out_rows);

/// || W X - Wq Xq ||_F^2 via reference_gemm. x, xq are channels x tokens.
double layerwise_error(const Tensor2D& w, const Tensor2D& x, const Tensor2D& wq,
                       const Tensor2D& xq);

/// Saliency (or random) channel selection -> mixed-step activation
/// quantization + uniform per-group weight quantization -> layerwise error
/// and cost report. x is tokens x channels, w is out x channels.
PipelineResult run_activation_pipeline(const Tensor2D& w, const Tensor2D& x,
                                       double ratio, int t_prime, int levels,
                                       Selector selector, std::uint64_t seed);

/// Hessian-based (or random) input-channel selection -> mixed-step weight
/// quantization (RTN or greedy error-compensated) -> layerwise error with
/// full-precision activations. x_calib is tokens x channels.
PipelineResult run_weight_pipeline(const Tensor2D& w, const Tensor2D& x_calib,
                                   double ratio, int t_prime, int levels,
                                   Selector selector, WeightMethod method,
                                   std::uint64_t seed);

/// Elementwise Hessian saliency rank -> 1/2/4-step assignment by mix
/// fractions (most salient get 4) -> per-group ternary encoding ->
/// layerwise error. mix = {f1, f2, f4}, must sum to 1.
PipelineResult run_ternary_pipeline(const Tensor2D& w, const Tensor2D& x_calib,
                                    const std::array<double, 3>& mix);

/// Mixed-step quantization of K and V (per-channel mean-square saliency),
/// then softmax(Q K^T / sqrt(d)) V with the dequantized caches.
Tensor2D attention_demo(const Tensor2D& q, const Tensor2D& k, const Tensor2D& v,
                        double ratio, int t_prime, int levels);

/// Plan-aware round-to-nearest weight quantizer: per (row, group) min/max
/// grid with salient input channels on the T'-times finer grid. Returns the
/// dequantized weights.
Tensor2D rtn_quantize_weights(const Tensor2D& w, const ChannelPlan& plan,
                              std::size_t group_size);

/// Greedy column-order quantizer with error compensation through the
/// damped inverse Hessian (natural order, no reordering). Group scales are
/// taken from the running compensated weights when a group opens.
Tensor2D gptq_quantize_weights(const Tensor2D& w, const HessianMatrix& h,
                               const ChannelPlan& plan, std::size_t group_size);

/// Full-precision attention used as the demo baseline.
Tensor2D attention_reference(const Tensor2D& q, const Tensor2D& k,
                             const Tensor2D& v);

}  // namespace spikequant
