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
#include "spikequant/quant.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spikequant {

namespace {

// Same boundary guard as the spiking encoder; floor-mode codes are
// floor(u/delta + eps) so both paths agree exactly.
constexpr double kFloorEps = 1e-9;

std::int64_t quantize_one(double shifted, double delta, long max_code,
                          RoundingMode rounding) {
    if (delta <= 0.0) {
        return 0;
    }
    const double q = shifted / delta;
    std::int64_t code;
    if (rounding == RoundingMode::Floor) {
        code = static_cast<std::int64_t>(std::floor(q + kFloorEps));
    } else {
        code = std::llround(q);
    }
    return std::clamp<std::int64_t>(code, 0, max_code);
}

}  // namespace

QuantizedTensor uniform_quantize_levels(const Tensor2D& x, long levels,
                                        QuantGranularity mode,
                                        RoundingMode rounding) {
    if (levels < 2) {
        throw std::invalid_argument("uniform_quantize_levels: levels must be >= 2");
    }
    if (mode == QuantGranularity::PerGroup) {
        throw std::invalid_argument(
            "uniform_quantize_levels: use group_quantize_symmetric for groups");
    }
    if (!x.valid()) {
        throw std::invalid_argument("uniform_quantize_levels: non-finite input");
    }

    QuantizedTensor q;
    q.rows = x.rows;
    q.cols = x.cols;
    q.codes = IntMat(x.rows, x.cols);
    q.granularity = mode;
    q.levels = levels;
    q.bits = static_cast<int>(std::ceil(std::log2(static_cast<double>(levels))));

    const bool per_token = mode == QuantGranularity::PerToken;
    const std::size_t n_slices = per_token ? x.rows : x.cols;
    q.scale.assign(n_slices, 0.0);
    q.zero_point.assign(n_slices, 0.0);

    for (std::size_t s = 0; s < n_slices; ++s) {
        const std::size_t len = per_token ? x.cols : x.rows;
        double lo = per_token ? x.at(s, 0) : x.at(0, s);
        double hi = lo;
        for (std::size_t i = 1; i < len; ++i) {
            const double v = per_token ? x.at(s, i) : x.at(i, s);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        const double delta = (hi - lo) / static_cast<double>(levels - 1);
        q.scale[s] = delta;
        q.zero_point[s] = lo;
        for (std::size_t i = 0; i < len; ++i) {
            const std::size_t r = per_token ? s : i;
            const std::size_t c = per_token ? i : s;
            q.codes.at(r, c) = static_cast<std::int32_t>(
                quantize_one(x.at(r, c) - lo, delta, levels - 1, rounding));
        }
    }
    return q;
}

QuantizedTensor uniform_quantize(const Tensor2D& x, int bits,
                                 QuantGranularity mode, RoundingMode rounding) {
    if (bits < 1 || bits > 8) {
        throw std::invalid_argument("uniform_quantize: bits must be in [1, 8]");
    }
    QuantizedTensor q = uniform_quantize_levels(x, 1L << bits, mode, rounding);
    q.bits = bits;
    return q;
}

QuantizedTensor group_quantize_symmetric(const Tensor2D& w, int bits,
                                         std::size_t group_size) {
    if (bits < 2 || bits > 8) {
        throw std::invalid_argument("group_quantize_symmetric: bits must be in [2, 8]");
    }
    if (group_size == 0) {
        throw std::invalid_argument("group_quantize_symmetric: group_size must be > 0");
    }
    QuantizedTensor q;
    q.rows = w.rows;
    q.cols = w.cols;
    q.codes = IntMat(w.rows, w.cols);
    q.granularity = QuantGranularity::PerGroup;
    q.symmetric = true;
    q.bits = bits;
    q.levels = 1L << bits;
    q.group_size = group_size;
    const std::size_t ngroups = q.num_groups();
    q.scale.assign(w.rows * ngroups, 0.0);

    const long max_code = (1L << (bits - 1)) - 1;
    for (std::size_t r = 0; r < w.rows; ++r) {
        for (std::size_t g = 0; g < ngroups; ++g) {
            const std::size_t c0 = g * group_size;
            const std::size_t c1 = std::min(w.cols, c0 + group_size);
            double absmax = 0.0;
            for (std::size_t c = c0; c < c1; ++c) {
                absmax = std::max(absmax, std::fabs(w.at(r, c)));
            }
            const double scale =
                absmax > 0.0 ? absmax / static_cast<double>(max_code) : 0.0;
            q.scale[r * ngroups + g] = scale;
            for (std::size_t c = c0; c < c1; ++c) {
                std::int64_t code = 0;
                if (scale > 0.0) {
                    code = std::llround(w.at(r, c) / scale);
                    code = std::clamp<std::int64_t>(code, -max_code, max_code);
                }
                q.codes.at(r, c) = static_cast<std::int32_t>(code);
            }
        }
    }
    return q;
}

Tensor2D dequantize(const QuantizedTensor& q) {
    Tensor2D x(q.rows, q.cols);
    switch (q.granularity) {
        case QuantGranularity::PerToken:
            for (std::size_t r = 0; r < q.rows; ++r) {
                for (std::size_t c = 0; c < q.cols; ++c) {
                    x.at(r, c) = q.scale[r] * q.codes.at(r, c) + q.zero_point[r];
                }
            }
            break;
        case QuantGranularity::PerChannel:
            for (std::size_t r = 0; r < q.rows; ++r) {
                for (std::size_t c = 0; c < q.cols; ++c) {
                    x.at(r, c) = q.scale[c] * q.codes.at(r, c) + q.zero_point[c];
                }
            }
            break;
        case QuantGranularity::PerGroup: {
            const std::size_t ngroups = q.num_groups();
            for (std::size_t r = 0; r < q.rows; ++r) {
                for (std::size_t c = 0; c < q.cols; ++c) {
                    const double s = q.scale[r * ngroups + c / q.group_size];
                    const double z =
                        q.symmetric ? 0.0 : q.zero_point[r * ngroups + c / q.group_size];
                    x.at(r, c) = s * q.codes.at(r, c) + z;
                }
            }
            break;
        }
    }
    return x;
}

std::vector<bool> ChannelPlan::salient_mask() const {
    std::vector<bool> mask(channels, false);
    for (std::size_t c : salient_set) {
        mask[c] = true;
    }
    return mask;
}

void ChannelPlan::validate() const {
    if (salient_steps < 1 || base_steps != 1 || levels < 2) {
        throw std::invalid_argument("ChannelPlan: need salient_steps >= 1, base_steps == 1, levels >= 2");
    }
    std::vector<bool> seen(channels, false);
    for (std::size_t c : salient_set) {
        if (c >= channels || seen[c]) {
            throw std::invalid_argument("ChannelPlan: salient_set must be unique indices < channels");
        }
        seen[c] = true;
    }
}

SpikeTrain mixed_step_quantize(const Tensor2D& x, const ChannelPlan& plan) {
    plan.validate();
    if (plan.channels != x.cols) {
        throw std::invalid_argument("mixed_step_quantize: plan/tensor shape mismatch");
    }
    const auto mask = plan.salient_mask();
    SpikeTrain train;
    train.tokens = x.rows;
    train.channels = x.cols;
    train.steps = static_cast<std::size_t>(plan.salient_steps);
    train.form = SpikeForm::Merged;
    train.codes.assign(train.tokens * train.channels * train.steps, 0);
    train.params.reserve(x.rows);
    for (std::size_t t = 0; t < x.rows; ++t) {
        const TokenQuantParams p = compute_token_params(
            {x.row(t), x.cols}, plan.salient_steps, plan.levels);
        train.params.push_back(p);
        TokenQuantParams base = p;
        base.steps = 1;
        base.step_delta = p.v_th_unit;  // range/(L-1), one-step grid
        for (std::size_t c = 0; c < x.cols; ++c) {
            const double u = x.at(t, c) - p.zero_point;
            if (mask[c]) {
                gif_fire(u, p, &train.code(t, c, 0));
            } else {
                gif_fire(u, base, &train.code(t, c, 0));
            }
        }
    }
    return train;
}

Tensor2D mixed_step_dequantize(const SpikeTrain& s, const ChannelPlan& plan) {
    plan.validate();
    if (plan.channels != s.channels) {
        throw std::invalid_argument("mixed_step_dequantize: inconsistent plan");
    }
    const auto mask = plan.salient_mask();
    Tensor2D x(s.tokens, s.channels);
    for (std::size_t t = 0; t < s.tokens; ++t) {
        const TokenQuantParams& p = s.params[t];
        for (std::size_t c = 0; c < s.channels; ++c) {
            const double delta = mask[c] ? p.step_delta : p.v_th_unit;
            x.at(t, c) = delta * static_cast<double>(s.code_sum(t, c)) + p.zero_point;
        }
    }
    return x;
}

}  // namespace spikequant
