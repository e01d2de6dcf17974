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
#include "spikequant/neuron.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spikequant {

namespace {

// Guard against floating-point descent just below exact integer boundaries.
// Added to the quotient, so it telescopes through the membrane recurrence:
// the per-(token,channel) total is exactly floor(u/delta + eps).
constexpr double kFloorEps = 1e-9;

void check_finite(std::span<const double> values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument(std::string(what) + ": non-finite input");
        }
    }
}

}  // namespace

std::int64_t SpikeTrain::code_sum(std::size_t t, std::size_t c) const {
    const std::int32_t* p = codes.data() + (t * channels + c) * steps;
    std::int64_t sum = 0;
    for (std::size_t s = 0; s < steps; ++s) {
        sum += p[s];
    }
    return sum;
}

TokenQuantParams compute_token_params(std::span<const double> token, int steps,
                                      int levels) {
    if (token.empty()) {
        throw std::invalid_argument("compute_token_params: empty token");
    }
    if (steps < 1 || levels < 2) {
        throw std::invalid_argument("compute_token_params: need steps >= 1, levels >= 2");
    }
    check_finite(token, "compute_token_params");

    const auto [lo_it, hi_it] = std::minmax_element(token.begin(), token.end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;

    TokenQuantParams p;
    p.zero_point = lo;
    p.levels_per_step = levels;
    p.steps = steps;
    if (range > 0.0) {
        p.step_delta = range / (static_cast<double>(steps) * (levels - 1));
        p.v_th_unit = p.step_delta * steps;
    }
    return p;
}

void gif_fire(double shifted, const TokenQuantParams& p, std::int32_t* out_codes) {
    const int levels = p.levels_per_step;
    if (p.v_th_unit <= 0.0) {
        std::fill_n(out_codes, p.steps, 0);
        return;
    }
    const double theta = p.v_th_unit;
    double v = 0.0;
    for (int s = 0; s < p.steps; ++s) {
        v += shifted;
        auto k = static_cast<std::int64_t>(std::floor(v / theta + kFloorEps));
        k = std::clamp<std::int64_t>(k, 0, levels - 1);
        v -= static_cast<double>(k) * theta;
        out_codes[s] = static_cast<std::int32_t>(k);
    }
}

SpikeTrain gif_encode(const Tensor2D& x, int steps, int levels) {
    check_finite(x.data, "gif_encode");
    SpikeTrain train;
    train.tokens = x.rows;
    train.channels = x.cols;
    train.steps = static_cast<std::size_t>(steps);
    train.form = SpikeForm::Merged;
    train.codes.resize(x.rows * x.cols * static_cast<std::size_t>(steps));
    train.params.reserve(x.rows);
    for (std::size_t t = 0; t < x.rows; ++t) {
        const TokenQuantParams p =
            compute_token_params({x.row(t), x.cols}, steps, levels);
        train.params.push_back(p);
        for (std::size_t c = 0; c < x.cols; ++c) {
            gif_fire(x.at(t, c) - p.zero_point, p, &train.code(t, c, 0));
        }
    }
    return train;
}

Tensor2D gif_decode(const SpikeTrain& s) {
    if (s.form == SpikeForm::ExpandedTernary) {
        throw std::invalid_argument("gif_decode: ternary trains use ternary_decode");
    }
    Tensor2D x(s.tokens, s.channels);
    for (std::size_t t = 0; t < s.tokens; ++t) {
        const TokenQuantParams& p = s.params[t];
        for (std::size_t c = 0; c < s.channels; ++c) {
            x.at(t, c) = p.step_delta * static_cast<double>(s.code_sum(t, c)) +
                         p.zero_point;
        }
    }
    return x;
}

SpikeTrain expand_train(const SpikeTrain& merged) {
    if (merged.form != SpikeForm::Merged) {
        throw std::invalid_argument("expand_train: input must be merged");
    }
    const std::size_t sub = merged.params.empty()
                                ? 1
                                : static_cast<std::size_t>(
                                      merged.params.front().levels_per_step - 1);
    SpikeTrain out;
    out.tokens = merged.tokens;
    out.channels = merged.channels;
    out.steps = merged.steps * sub;
    out.form = SpikeForm::ExpandedBinary;
    out.params = merged.params;
    out.codes.assign(out.tokens * out.channels * out.steps, 0);
    for (std::size_t t = 0; t < merged.tokens; ++t) {
        for (std::size_t c = 0; c < merged.channels; ++c) {
            for (std::size_t s = 0; s < merged.steps; ++s) {
                const std::int32_t k = merged.code(t, c, s);
                for (std::int32_t i = 0; i < k; ++i) {
                    out.code(t, c, s * sub + static_cast<std::size_t>(i)) = 1;
                }
            }
        }
    }
    return out;
}

SpikeTrain merge_train(const SpikeTrain& binary, int levels) {
    if (binary.form != SpikeForm::ExpandedBinary) {
        throw std::invalid_argument("merge_train: input must be expanded-binary");
    }
    const std::size_t sub = static_cast<std::size_t>(levels - 1);
    if (sub == 0 || binary.steps % sub != 0) {
        throw std::invalid_argument(
            "merge_train: step count not divisible by levels-1");
    }
    SpikeTrain out;
    out.tokens = binary.tokens;
    out.channels = binary.channels;
    out.steps = binary.steps / sub;
    out.form = SpikeForm::Merged;
    out.params = binary.params;
    out.codes.assign(out.tokens * out.channels * out.steps, 0);
    for (std::size_t t = 0; t < binary.tokens; ++t) {
        for (std::size_t c = 0; c < binary.channels; ++c) {
            for (std::size_t s = 0; s < out.steps; ++s) {
                std::int32_t sum = 0;
                for (std::size_t i = 0; i < sub; ++i) {
                    sum += binary.code(t, c, s * sub + i);
                }
                out.code(t, c, s) = sum;
            }
        }
    }
    return out;
}

TernaryEncoding ternary_encode(std::span<const double> weights,
                               std::span<const int> steps_per_element,
                               double group_absmax) {
    if (weights.size() != steps_per_element.size()) {
        throw std::invalid_argument("ternary_encode: size mismatch");
    }
    check_finite(weights, "ternary_encode");
    int max_steps = 1;
    for (int s : steps_per_element) {
        if (s != 1 && s != 2 && s != 4) {
            throw std::invalid_argument("ternary_encode: steps must be 1, 2 or 4");
        }
        max_steps = std::max(max_steps, s);
    }
    if (group_absmax == 0.0) {
        for (double w : weights) {
            if (w != 0.0) {
                throw std::invalid_argument(
                    "ternary_encode: zero group_absmax with nonzero weights");
            }
        }
    }

    TernaryEncoding enc;
    enc.train.tokens = 1;
    enc.train.channels = weights.size();
    enc.train.steps = static_cast<std::size_t>(max_steps);
    enc.train.form = SpikeForm::ExpandedTernary;
    enc.train.codes.assign(weights.size() * static_cast<std::size_t>(max_steps), 0);
    TokenQuantParams nominal;
    nominal.v_th_unit = group_absmax;
    nominal.steps = max_steps;
    nominal.levels_per_step = 3;
    enc.train.params.push_back(nominal);
    enc.deltas.resize(weights.size());

    for (std::size_t i = 0; i < weights.size(); ++i) {
        const int t_e = steps_per_element[i];
        const double delta = group_absmax / static_cast<double>(t_e);
        enc.deltas[i] = delta;
        std::int64_t n = 0;
        if (group_absmax > 0.0) {
            n = std::llround(weights[i] / delta);
            n = std::clamp<std::int64_t>(n, -t_e, t_e);
        }
        const std::int32_t sign = n < 0 ? -1 : 1;
        const std::int64_t count = n < 0 ? -n : n;
        for (std::int64_t s = 0; s < count; ++s) {
            enc.train.code(0, i, static_cast<std::size_t>(s)) = sign;
        }
    }
    return enc;
}

std::vector<double> ternary_decode(const TernaryEncoding& enc) {
    std::vector<double> out(enc.train.channels);
    for (std::size_t i = 0; i < enc.train.channels; ++i) {
        out[i] = enc.deltas[i] * static_cast<double>(enc.train.code_sum(0, i));
    }
    return out;
}

}  // namespace spikequant
