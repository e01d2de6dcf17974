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
#include <utility>

#include "spikequant/tensor.hpp"

namespace spikequant {

/// splitmix64: fixed-increment counter generator with the published constants
/// (increment 0x9E3779B97F4A7C15, mix multipliers 0xBF58476D1CE4E5B9 and
/// 0x94D049BB133111EB). The raw u64 stream is identical on every platform
/// for a given seed. Normal deviates use Box-Muller on consecutive draws.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64();

    /// Uniform double in [0, 1), 53 significant bits.
    double next_unit();

    /// Uniform integer in [0, bound); modulo reduction (bias < 2^-53 for the
    /// bounds used here).
    std::uint64_t next_below(std::uint64_t bound);

    /// Box-Muller pair from two consecutive u64 draws.
    std::pair<double, double> next_normal_pair();

    std::uint64_t seed_state() const { return state_; }

  private:
    std::uint64_t state_;
};

/// rows*cols normal deviates, filled row-major in Box-Muller pairs.
/// Deterministic per seed; stddev 0 yields a constant tensor.
Tensor2D rng_normal(Rng& rng, std::size_t rows, std::size_t cols, double mean,
                    double stddev);

}  // namespace spikequant
