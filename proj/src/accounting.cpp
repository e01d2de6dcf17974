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
#include "spikequant/accounting.hpp"

#include <cmath>
#include <stdexcept>

namespace spikequant {

double ace(std::uint64_t macs, double bw, double ba) {
    if (bw < 0.0 || ba < 0.0) {
        throw std::invalid_argument("ace: negative bit widths");
    }
    return static_cast<double>(macs) * bw * ba;
}

double mixed_ace_ratio(const ChannelPlan& plan, double bits_per_step,
                       double other_side_bits, double fp_bits) {
    plan.validate();
    const double ratio = plan.salient_ratio();
    const double avg_bits =
        bits_per_step * (1.0 + ratio * (plan.salient_steps - 1));
    return avg_bits * other_side_bits / (fp_bits * fp_bits);
}

double train_sparsity(const SpikeTrain& expanded) {
    if (expanded.form == SpikeForm::Merged) {
        throw std::invalid_argument("train_sparsity: expanded form required");
    }
    if (expanded.codes.empty()) {
        return 0.0;
    }
    std::size_t nonzero = 0;
    for (std::int32_t c : expanded.codes) {
        if (c != 0) {
            ++nonzero;
        }
    }
    return static_cast<double>(nonzero) /
           static_cast<double>(expanded.codes.size());
}

double sparse_ace(const SpikeTrain& expanded, double weight_bits,
                  std::size_t output_width) {
    const double sparsity = train_sparsity(expanded);
    const double dense_macs =
        static_cast<double>(expanded.codes.size()) *
        static_cast<double>(output_width);
    return sparsity * dense_macs * weight_bits * 1.0;
}

double equal_steps(std::span<const double> fractions, std::span<const int> steps) {
    if (fractions.size() != steps.size()) {
        throw std::invalid_argument("equal_steps: size mismatch");
    }
    double total = 0.0;
    double avg = 0.0;
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        total += fractions[i];
        avg += fractions[i] * static_cast<double>(steps[i]);
    }
    if (std::fabs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("equal_steps: fractions must sum to 1");
    }
    return avg;
}

double code_length(CodeScheme scheme, double T, double L, double ratio) {
    switch (scheme) {
        case CodeScheme::If:
            return T;
        case CodeScheme::Gif:
            return T / L * std::log2(L);
        case CodeScheme::Quant:
            return std::log2(T);
        case CodeScheme::Mixed: {
            const double t_prime = T / L;
            return std::log2(L) * (1.0 + ratio * (t_prime - 1.0));
        }
    }
    throw std::invalid_argument("code_length: unknown scheme");
}

}  // namespace spikequant
