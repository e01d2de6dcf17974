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
#include "spikequant/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spikequant {

std::uint64_t Rng::next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double Rng::next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::next_below(std::uint64_t bound) {
    return bound ? next_u64() % bound : 0;
}

std::pair<double, double> Rng::next_normal_pair() {
    // u1 in (0,1] keeps the log finite; u2 in [0,1).
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(angle), r * std::sin(angle)};
}

Tensor2D rng_normal(Rng& rng, std::size_t rows, std::size_t cols, double mean,
                    double stddev) {
    if (stddev < 0.0) {
        throw std::invalid_argument("rng_normal: stddev must be >= 0");
    }
    Tensor2D t(rows, cols);
    const std::size_t n = t.size();
    for (std::size_t i = 0; i < n; i += 2) {
        auto [z0, z1] = rng.next_normal_pair();
        t.data[i] = mean + stddev * z0;
        if (i + 1 < n) {
            t.data[i + 1] = mean + stddev * z1;
        }
    }
    return t;
}

}  // namespace spikequant
