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
#include <ostream>
#include <stdexcept>
#include <vector>

#include "spikequant/rng.hpp"
#include "spikequant/tensor.hpp"

namespace spikequant {

/// Thrown when a factorization or solve fails (insufficient damping).
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class SaliencyMetric { ActivationGradient, WeightHessian, Random };
enum class ChannelAxis { Rows, Cols };

struct SaliencyReport {
    SaliencyMetric metric = SaliencyMetric::ActivationGradient;
    std::vector<double> per_channel;
    std::vector<std::size_t> rank;      // channel indices, descending score
    std::vector<std::size_t> selected;  // top round(ratio*n), ascending
    double ratio = 0.0;
};

/// Damped calibration Hessian 2*X*X^T + lambda*I with
/// lambda = damping_frac * mean(diag(2*X*X^T)).
struct HessianMatrix {
    std::size_t dim = 0;
    std::vector<double> values;  // dim x dim row-major, damping included
    double damping = 0.0;        // lambda actually added

    double at(std::size_t i, std::size_t j) const { return values[i * dim + j]; }
};

/// First-order activation saliency X o (W^T (W X)), elementwise.
/// x is channels x tokens, w is out x channels.
Tensor2D activation_saliency(const Tensor2D& x, const Tensor2D& w);

HessianMatrix hessian(const Tensor2D& x, double damping_frac);

/// Second-order weight saliency W_ij^2 / ([H^-1]_ii)^2 with the inverse
/// computed via Cholesky. Throws NumericalError when factorization fails.
Tensor2D weight_saliency(const Tensor2D& w, const HessianMatrix& h);

/// Mean absolute saliency along the non-channel axis. axis names the axis
/// that indexes channels.
std::vector<double> aggregate_per_channel(const Tensor2D& s, ChannelAxis axis);

/// Top round(ratio*n) channels by score; ties broken by ascending index.
SaliencyReport select_salient(const std::vector<double>& scores, double ratio);

/// Uniformly random subset of size round(ratio*n), deterministic per seed.
SaliencyReport random_plan(std::size_t channels, double ratio, Rng& rng);

/// CSV emission: header "channel,score,rank,selected", one row per channel.
void write_saliency_csv(const SaliencyReport& report, std::ostream& out);

// Small dense SPD helpers shared with the greedy weight quantizer.
// cholesky_factor overwrites a with the lower factor; returns false when the
// matrix is not positive definite. cholesky_inverse returns the full inverse.
bool cholesky_factor(std::vector<double>& a, std::size_t n);
std::vector<double> cholesky_inverse(const std::vector<double>& a, std::size_t n);

}  // namespace spikequant
